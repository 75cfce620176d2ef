# DynoPlan - hierarchical option planning with learned goal heuristics and option regions
__version__ = "0.1.0"
