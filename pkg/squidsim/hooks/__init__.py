from squidsim.hooks.base import BaseHook
from squidsim.hooks.progress import ProgressLogHook

__all__ = ["BaseHook", "ProgressLogHook"]
