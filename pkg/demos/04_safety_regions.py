"""Probe the geometric safety layer: motion classes, swept regions, and the
recovery cascade for a synthetic scan with a wall ahead.

Run:  python3 demos/04_safety_regions.py
"""
import numpy as np

from lics.safety import SafetyConfig, check_action, filter_action, scan_to_points
from lics.simulator import LidarConfig, LidarScan

cfg = SafetyConfig()
lidar = LidarConfig(beam_count=360)

# wall 0.6 m ahead spanning a 45 degree cone
ranges = np.full(360, lidar.max_range)
angles = lidar.angles()
ranges[np.abs(angles) < np.pi / 8] = 0.6
points = scan_to_points(LidarScan(ranges, lidar.max_range), lidar)
print(f"{points.shape[0]} scan returns\n")

for v, w in ((0.3, 0.0), (1.5, 0.0), (1.0, 1.0), (1.0, -2.5), (0.0, 1.0)):
    verdict = check_action(points, v, w, cfg)
    extras = ""
    if verdict.inner_radius is not None:
        extras = (f" annulus [{verdict.inner_radius:.2f}, "
                  f"{verdict.outer_radius:.2f}] m")
    print(f"action ({v:+.1f}, {w:+.1f}): {verdict.motion_class:17s} "
          f"{'SAFE' if verdict.safe else 'UNSAFE':6s} "
          f"{verdict.offending.shape[0]:3d} offending points{extras}")

print("\nrecovery cascade for a fast approach toward the wall:")
(v, w), verdict = filter_action(points, 1.5, 0.0, cfg, goal_side=1.0)
print(f"proposed (1.5, 0.0) -> executed ({v:.2f}, {w:.2f}) "
      f"[{verdict.motion_class}, safe={verdict.safe}]")
