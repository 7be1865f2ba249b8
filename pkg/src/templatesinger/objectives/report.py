"""Total training objective and its per-component report.

The total is the plain unscaled sum of all components. The critic feedback
term (the negated critic score on generated windows) only participates in
the adversarial phase; earlier phases report it as exactly zero.
"""

import dataclasses
import json
import math

import torch

PHASES = ("pretrain", "critic-warmup", "adversarial")

COMPONENTS = ("l_mel", "l_gate", "l_svd", "l_mr", "l_att", "l_rec",
              "l_class", "l_spk", "l_critic_feedback")


@dataclasses.dataclass
class LossReport:
    l_mel: object = 0.0
    l_gate: object = 0.0
    l_svd: object = 0.0
    l_mr: object = 0.0
    l_att: object = 0.0
    l_rec: object = 0.0
    l_class: object = 0.0
    l_spk: object = 0.0
    l_critic_feedback: object = 0.0
    total: object = 0.0

    def to_dict(self):
        d = {name: _as_float(getattr(self, name)) for name in COMPONENTS}
        d["total"] = _as_float(self.total)
        return d

    def to_json(self, **extra):
        d = dict(extra)
        d.update(self.to_dict())
        return json.dumps(d)


def _as_float(x):
    if torch.is_tensor(x):
        return float(x.detach())
    return float(x)


def _is_finite(x):
    if torch.is_tensor(x):
        return bool(torch.isfinite(x).all())
    return math.isfinite(float(x))


def total_loss(l_mel=0.0, l_gate=0.0, l_svd=0.0, l_mr=0.0, l_att=0.0,
               l_rec=0.0, l_class=0.0, l_spk=0.0, critic_score=None,
               phase="pretrain"):
    """Assemble the report; total is the arithmetic sum of its fields.

    critic_score is the mean critic output on generated windows; outside
    the adversarial phase (or when absent) its feedback term is zero.
    Components may be python floats or torch scalars, so the returned
    total stays differentiable when its inputs are.
    """
    if phase not in PHASES:
        raise ValueError("unknown phase %r (expected one of %s)"
                         % (phase, ", ".join(PHASES)))
    if phase == "adversarial" and critic_score is not None:
        feedback = -critic_score
    else:
        feedback = 0.0

    parts = {
        "l_mel": l_mel, "l_gate": l_gate, "l_svd": l_svd, "l_mr": l_mr,
        "l_att": l_att, "l_rec": l_rec, "l_class": l_class, "l_spk": l_spk,
        "l_critic_feedback": feedback,
    }
    for name, value in parts.items():
        if not _is_finite(value):
            raise ValueError("non-finite loss component %s" % name)
    total = sum(parts.values())
    if not _is_finite(total):
        raise ValueError("non-finite loss component total")
    return LossReport(total=total, **parts)
