"""Close the loop: A* global plan, local goals, and the velocity-space
reference expert driving to the goal, with the trajectory drawn over the map.

Run:  python3 demos/03_expert_navigation.py [seed]
"""
import sys

import numpy as np

from lics.bench import optimal_time, run_trial
from lics.expert import DwaExpert
from lics.loop import SessionConfig
from lics.worldgen import WorldgenConfig, generate_world

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
world = generate_world(WorldgenConfig(seed=seed))
result = run_trial(world, DwaExpert(), SessionConfig(), seed=0,
                   max_v=1.0, keep_trace=True)

print(f"{world.id}: {result.outcome} in {result.elapsed:.1f} s "
      f"(optimal {optimal_time(world):.1f} s at the 2 m/s cap)")

grid = [["#" if world.cells[iy, ix] else "." for ix in range(world.width)]
        for iy in range(world.height)]
for row in result.trace:
    x, y, _ = row["pose"]
    ix, iy = world.cell_of(x, y)
    grid[iy][ix] = "o"
sx, sy = world.cell_of(world.start_pose[0], world.start_pose[1])
gx, gy = world.cell_of(*world.goal_point)
grid[sy][sx], grid[gy][gx] = "S", "G"
print("\n".join("".join(r) for r in reversed(grid)))
