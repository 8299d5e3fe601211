"""Pose algebra and constant-command motion.

Walks through the two building blocks everything else uses: composing and
inverting planar poses, and propagating a unicycle along exact circular arcs.
"""

import math

from formation_sim import Pose, VelocityCommand, compose, relative_pose, unicycle_step

print("== frames ==")
master = Pose(2.0, 1.0, math.pi / 4)
slot = Pose(0.6, 0.0, 0.0)  # 0.6 m ahead of the master, same heading
slave = compose(master, slot)
print(f"master at        {master}")
print(f"slave slot       {slot} (in the master frame)")
print(f"slave in world   {slave}")

r = relative_pose(master, slave)
print(f"measured back    ({r.x:.3f}, {r.y:.3f}, {r.theta:.3f})  -> the slot again")

print()
print("== arcs ==")
pose = Pose(0.0, 0.0, 0.0)
cmd = VelocityCommand(v=0.1, omega=0.1)  # 1 m turn radius
print("driving v=0.1 m/s, omega=0.1 rad/s in 1 s steps:")
for second in range(1, 6):
    pose = unicycle_step(pose, cmd, 1.0)
    print(f"  t={second}s  x={pose.x:+.3f}  y={pose.y:+.3f}  heading={pose.theta:+.3f} rad")

quarter = unicycle_step(Pose(0, 0, 0), cmd, math.pi / 2 / cmd.omega)
print(f"after a quarter turn the pose is ({quarter.x:.3f}, {quarter.y:.3f}), "
      f"heading {quarter.theta:.3f} rad (exactly on the unit circle)")
