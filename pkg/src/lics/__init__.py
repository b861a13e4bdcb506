"""Desk-scale navigation workbench.

Generate cluttered grid worlds, record noise-injected expert demonstrations,
clone them into a transformer (or MLP) policy, guard commands with a
geometric safety layer, and benchmark closed-loop navigation.
"""

from . import bench, demo, errors, expert, loop, model, planning, safety, simulator, trainer, worldgen
from .bench import ModelPolicy, TrialResult, aggregate, optimal_time, run_trial, score_trial
from .demo import Dataset, NoiseConfig, build_dataset, load_dataset, record_episode
from .expert import Action, DwaConfig, DwaExpert, Observation
from .loop import NavigationSession, SessionConfig
from .model import ModelConfig, forward, grad_check, load_checkpoint, mse_loss, save_checkpoint
from .planning import Costmap, LocalGoal, Path, extract_local_goal, inflate, plan_astar
from .safety import SafetyConfig, SafetyVerdict, check_action, classify_motion, filter_action, scan_to_points
from .simulator import (
    Footprint,
    LidarConfig,
    LidarScan,
    RobotState,
    VelocityLimits,
    footprint_collides,
    render_scan,
    resample_scan,
    step_dynamics,
)
from .trainer import TrainConfig, TrainReport, evaluate_mse, train
from .worldgen import World, WorldgenConfig, generate_world, load_world, save_world, split_worlds

__version__ = "0.1.0"
