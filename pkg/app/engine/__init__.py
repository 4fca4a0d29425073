"""Prox-average message passing engine."""
from app.engine.message_passing import (
    check_stop,
    initial_state,
    iterate,
    net_duals,
    peer_to_peer_time,
    prices,
    residuals,
    solve,
    update_rho,
)
from app.engine.state import IterationState, Solution, SolveConfig, TraceRow
