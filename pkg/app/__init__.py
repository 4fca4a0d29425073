"""Power scheduling by prox-average message passing."""
