"""Training-adaptive dropout schedule.

P starts at 0.1. The first epoch whose every minibatch reaches 80% training
accuracy fires the trigger; the epochs left after it are split into five
near-equal intervals (longer ones first) and interval ``i`` runs at
``P = 0.1 * i``. Epochs are numbered from 1, and the new P applies from the
epoch after the one just observed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

P_START = 0.1
P_STEP = 0.1
N_INTERVALS = 5
TRIGGER_ACCURACY = 0.80


@dataclass(frozen=True)
class DropoutState:
    total_epochs: int
    current_epoch: int = 0  # epochs observed so far
    triggered: bool = False
    trigger_epoch: int | None = None
    P: float = P_START

    def __post_init__(self):
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be positive")


def interval_lengths(remaining: int) -> list[int]:
    """Split ``remaining`` epochs into five intervals, longer ones first."""
    base, extra = divmod(remaining, N_INTERVALS)
    return [base + (1 if i < extra else 0) for i in range(N_INTERVALS)]


def p_for_epoch(epoch: int, trigger_epoch: int | None, total_epochs: int) -> float:
    """Dropout probability for 1-based ``epoch`` given where the trigger fired."""
    if trigger_epoch is None or epoch <= trigger_epoch:
        return P_START
    offset = epoch - trigger_epoch  # 1-based position in the remainder
    for i, length in enumerate(interval_lengths(total_epochs - trigger_epoch), start=1):
        if offset <= length:
            return round(P_STEP * min(i, N_INTERVALS), 1)
        offset -= length
    raise ValueError(f"epoch {epoch} is past the end of a {total_epochs}-epoch run")


def observe_epoch(state: DropoutState, minibatch_accuracies: Sequence[float]) -> DropoutState:
    """Record one finished epoch and return the state for the next one."""
    if state.current_epoch >= state.total_epochs:
        raise ValueError(f"all {state.total_epochs} epochs already observed")
    if len(minibatch_accuracies) == 0:
        raise ValueError("an epoch needs at least one minibatch accuracy")

    epoch = state.current_epoch + 1
    triggered, trigger_epoch = state.triggered, state.trigger_epoch
    if not triggered and min(minibatch_accuracies) >= TRIGGER_ACCURACY:
        triggered, trigger_epoch = True, epoch

    p = state.P
    if epoch < state.total_epochs:
        p = p_for_epoch(epoch + 1, trigger_epoch, state.total_epochs)
    return replace(state, current_epoch=epoch, triggered=triggered,
                   trigger_epoch=trigger_epoch, P=p)


def current_p(state: DropoutState) -> float:
    """The P to use for the upcoming epoch."""
    return state.P


def schedule(total_epochs: int, trigger_epoch: int | None) -> list[float]:
    """P for every epoch 1..total of a run whose trigger fired after ``trigger_epoch``."""
    return [p_for_epoch(e, trigger_epoch, total_epochs) for e in range(1, total_epochs + 1)]
