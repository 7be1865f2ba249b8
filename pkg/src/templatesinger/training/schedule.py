"""Training schedule: phases, learning-rate decay, divergence test.

Phase boundaries and the learning-rate half-life are fractions of the
total step count, so short desk-scale runs keep the same shape as long
ones. The adversarial phase starts at its scheduled fraction or once the
critic's real/fake score gap is stably positive, whichever happens later.
"""

import collections
import dataclasses
import math

import statistics

PHASE_PRETRAIN = "pretrain"
PHASE_WARMUP = "critic-warmup"
PHASE_ADVERSARIAL = "adversarial"


@dataclasses.dataclass(frozen=True)
class TrainSchedule:
    total_steps: int = 2000
    critic_warmup_start: float = 0.30   # fraction of total_steps
    adversarial_start: float = 0.50     # fraction of total_steps
    lr0: float = 5e-4
    lr_half_every: float = 0.20         # fraction of total_steps
    batch_size: int = 32
    grad_clip_norm: float = 1.0
    r: int = 5
    seed: int = 0

    # adversarial mechanics
    critic_updates: int = 5             # critic steps per generator step
    window_count: int = 8               # windows per draw
    window_min: int = 8
    window_max: int = 32
    gp_weight: float = 10.0
    divergence_window: int = 500

    # textless conditioning: fraction of steps trained without text so the
    # learned textless memory token gets gradients
    textless_rate: float = 0.1

    # artifact cadence
    checkpoint_every: int = 500
    log_every: int = 10

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("total_steps must be positive")
        if not (0.0 < self.critic_warmup_start
                < self.adversarial_start < 1.0):
            raise ValueError("need 0 < critic_warmup_start < "
                             "adversarial_start < 1")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.lr_half_every <= 0:
            raise ValueError("lr_half_every must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be positive")
        if not (1 <= self.window_min <= self.window_max):
            raise ValueError("need 1 <= window_min <= window_max")
        if not (0.0 <= self.textless_rate < 1.0):
            raise ValueError("textless_rate must be in [0, 1)")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def lr_at(step, schedule):
    """lr0 halved every lr_half_every fraction of the total run."""
    if step < 0:
        raise ValueError("step must be >= 0")
    period = schedule.lr_half_every * schedule.total_steps
    return schedule.lr0 * 0.5 ** math.floor(step / period)


def phase_at(step, schedule, diverged=True):
    """Phase of a step; the adversarial phase additionally waits for the
    critic divergence test when it has not passed yet."""
    if step < 0:
        raise ValueError("step must be >= 0")
    if step < schedule.critic_warmup_start * schedule.total_steps:
        return PHASE_PRETRAIN
    if step < schedule.adversarial_start * schedule.total_steps:
        return PHASE_WARMUP
    return PHASE_ADVERSARIAL if diverged else PHASE_WARMUP


class DivergenceTracker:
    """Rolling test that the critic separates real from generated.

    Tracks the per-step gap mean(real scores) - mean(fake scores) over a
    rolling window; diverged once the window mean exceeds twice the
    window standard deviation. The flag is sticky so phases can never
    move backward.
    """

    def __init__(self, window=500):
        if window < 2:
            raise ValueError("window must be >= 2")
        self.gaps = collections.deque(maxlen=window)
        self._diverged = False

    def update(self, gap):
        self.gaps.append(float(gap))
        if not self._diverged and len(self.gaps) >= 2:
            mean = statistics.fmean(self.gaps)
            sd = statistics.pstdev(self.gaps)
            if mean > 2.0 * sd:
                self._diverged = True
        return self._diverged

    @property
    def diverged(self):
        return self._diverged
