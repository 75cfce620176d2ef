# Option model, rollouts and the planner
