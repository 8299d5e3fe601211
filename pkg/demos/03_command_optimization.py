"""One control solve, dissected.

Builds a single slave's decision problem (a measured formation error while
the master drives a curve), evaluates the expected-error objective at a few
candidate commands and shows the optimizer's pick.
"""

from formation_sim import (
    ControlInputState,
    CycleTiming,
    DemParams,
    ErrorVec,
    Pose,
    VelocityCommand,
    WeightMatrix,
    clamp_command,
    dem_command,
    dem_objective,
)

timing = CycleTiming(T=0.1, d=0.5)
params = DemParams(
    p_assumed=0.7, weights=WeightMatrix(), rho=1.4153e-5,
    T=timing.T, d=timing.d, v_max=0.15, omega_max=0.15,
)

master_cmd = VelocityCommand(0.1, 0.08)       # the master is turning left
slave_prev = VelocityCommand(0.11, 0.05)      # what the slave is running now
error = ErrorVec(0.012, -0.008, 0.02)         # measured at the cycle start
desired = Pose(0.6, 0.6, 0.0)
state = ControlInputState(error, master_cmd, slave_prev, master_cmd)

J = dem_objective(state, desired, params, timing)
best = dem_command(state, desired, params, timing)
hold = clamp_command(slave_prev, params.v_max, params.omega_max)

print(f"measured error: ex={error.ex} m, ey={error.ey} m, etheta={error.etheta} rad")
print(f"master command: v={master_cmd.v}, omega={master_cmd.omega}")
print()
print("candidate command           expected cost")
for name, u in [
    ("stop (0, 0)", VelocityCommand(0, 0)),
    ("hold previous", hold),
    ("copy the master", master_cmd),
    ("optimizer's pick", best),
]:
    print(f"{name:26s}  {J(u):.3e}" + ("   <- returned" if u == best else ""))

print()
print(f"pick: v={best.v:+.4f} m/s, omega={best.omega:+.4f} rad/s")
print("the pick shades the feedforward toward the error, but gently: an")
print("aggressive correction would be dangerous if a delivery loss froze it")
print("at the slave for several cycles")
