"""Generate a handful of cluttered worlds and print them as ASCII maps.

Run:  python3 demos/01_generate_worlds.py [out_dir]
"""
import sys

from lics.worldgen import WorldgenConfig, generate_world, save_world, world_to_text

out_dir = sys.argv[1] if len(sys.argv) > 1 else None

for seed in (0, 1, 2):
    world = generate_world(WorldgenConfig(seed=seed))
    print(f"--- {world.id}: {world.width}x{world.height} cells at "
          f"{world.resolution} m, shortest path {world.shortest_path_length:.2f} m")
    print(world_to_text(world).split("\n\n", 1)[1])
    if out_dir:
        save_world(world, f"{out_dir}/{world.id}.world")
        print(f"saved to {out_dir}/{world.id}.world")
