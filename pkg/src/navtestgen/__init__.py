"""Search-based simulation testing for robot navigation and obstacle avoidance."""

__version__ = "0.1.0"
