"""The communication-control cycle under a lossy link.

Each cycle the master computes fresh commands; a slave applies a delivered
command only at the synchronized switch instant d*T into the cycle, and keeps
its previous command whenever delivery misses the deadline.
"""

import numpy as np

from formation_sim import (
    CycleTiming,
    LinkModel,
    ProtocolState,
    VelocityCommand,
    advance_cycle,
    sample_delivery,
)

timing = CycleTiming(T=0.1, d=0.5)
link = LinkModel(p_true=0.6)  # a fairly bad link
rng = np.random.default_rng(7)

state = ProtocolState.initial(n_slaves=1)
print(f"cycle timing: T={timing.T}s, switch at {timing.hold_duration}s into the cycle")
print(f"link delivers on time with probability {link.p_true}")
print()
print("cycle  computed v  delivered  executing after switch")
for k in range(10):
    computed = VelocityCommand(round(0.1 + 0.01 * k, 3), 0.0)
    delivered = sample_delivery(link, 1, rng)
    state, plans = advance_cycle(state, [computed], delivered, timing)
    plan = plans[0]
    mark = "yes" if delivered[0] else "LOST"
    print(f"{k:5d}  {computed.v:10.3f}  {mark:9s}  {plan[-1].cmd.v:.3f}"
          + ("   <- held previous command" if not delivered[0] else ""))

print()
print("the hold guarantees every robot switches commands at the same instant,")
print("so a lost packet degrades gracefully instead of desynchronizing the team")
