"""The nine-way ablation grid over loss components.

Component tokens match the LossReport fields they enable; "critic" turns
on the adversarial branch (critic training plus the feedback term). Mel,
gate, and guided-attention losses are always on: the baseline is the
plain conditioned sequence-to-sequence model. Loss scaling is
deliberately not implemented (the total is always the unscaled sum), so
the scaled configuration is an alias kept only to complete the grid.
"""

BASE = frozenset({"l_mel", "l_gate", "l_att"})
AUX = frozenset({"l_svd", "l_mr", "l_rec", "l_class", "l_spk"})

ABLATIONS = {
    "baseline": BASE,
    "baseline-svd": BASE | {"l_svd"},
    "baseline-mel-rate": BASE | {"l_mr"},
    "baseline-svd-mel-rate": BASE | {"l_svd", "l_mr"},
    "no-feature-decoders": (BASE | AUX) - {"l_rec"},
    "no-mel-classifier": (BASE | AUX) - {"l_class"},
    "no-critic-scaled": BASE | AUX,
    "no-critic": BASE | AUX,
    "full": BASE | AUX | {"critic"},
}

# positional aliases for the nine-way grid
NUMBERED = {
    "1": "baseline",
    "2": "baseline-svd",
    "3": "baseline-mel-rate",
    "4": "baseline-svd-mel-rate",
    "5": "no-feature-decoders",
    "6": "no-mel-classifier",
    "7": "no-critic-scaled",
    "8": "no-critic",
    "9": "full",
}


def resolve_ablation(name):
    """Component set for an ablation name or its numeric alias."""
    key = NUMBERED.get(str(name), str(name))
    if key not in ABLATIONS:
        raise ValueError("unknown ablation %r (choose from %s or 1-9)"
                         % (name, ", ".join(sorted(ABLATIONS))))
    return key, ABLATIONS[key]
