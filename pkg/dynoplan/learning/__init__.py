# Learning module - goal heuristic, option regions, option dynamics
