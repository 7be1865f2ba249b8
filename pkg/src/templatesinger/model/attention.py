"""Mixture-of-logistics attention with a monotonic location update.

Weights come from the query alone: a small MLP predicts, per mixture
component, a location increment, a scale, and a mixture logit. Locations
only ever move forward (softplus of the increment), which biases the
alignment to be monotonic over memory positions. The weight of position j
is the mixture CDF mass falling in (j - 0.5, j + 0.5].
"""

import torch
from torch import nn

MIN_SCALE = 1e-3
WEIGHT_EPS = 1e-8


def logistic_mixture_weights(mu, scale, mix_logits, n_positions, mask=None):
    """Discretized logistic mixture over integer positions.

    mu, scale, mix_logits: (B, K). Returns (B, n_positions) weights that
    are nonnegative and sum to 1 over valid positions.
    """
    pos = torch.arange(n_positions, device=mu.device, dtype=mu.dtype)
    upper = (pos[None, None, :] + 0.5 - mu[:, :, None]) / scale[:, :, None]
    lower = (pos[None, None, :] - 0.5 - mu[:, :, None]) / scale[:, :, None]
    per_comp = torch.sigmoid(upper) - torch.sigmoid(lower)  # (B, K, N)
    mix = torch.softmax(mix_logits, dim=1)
    w = (mix[:, :, None] * per_comp).sum(dim=1)
    if mask is not None:
        w = w * mask.to(w.dtype)
    return w / (w.sum(dim=1, keepdim=True) + WEIGHT_EPS)


class MoLAttention(nn.Module):
    def __init__(self, query_dim, hidden, n_components):
        super().__init__()
        self.n_components = n_components
        self.query_proj = nn.Linear(query_dim, hidden)
        self.mlp = nn.Sequential(
            nn.Linear(hidden, hidden), nn.Tanh(),
            nn.Linear(hidden, 3 * n_components),
        )

    def initial_state(self, batch_size, device=None, dtype=None):
        # component locations start just before the first position
        return torch.zeros(batch_size, self.n_components, device=device,
                           dtype=dtype)

    def forward(self, query, query_pos_emb, memory, memory_mask, mu):
        """query: (B, Q); memory: (B, N, M); mu: (B, K) running locations.

        Returns (context (B, M), weights (B, N), new mu).
        """
        q = self.query_proj(query) + query_pos_emb
        params = self.mlp(q)
        k = self.n_components
        delta, log_scale, mix_logits = params.split(k, dim=1)
        new_mu = mu + torch.nn.functional.softplus(delta)
        scale = torch.nn.functional.softplus(log_scale) + MIN_SCALE
        weights = logistic_mixture_weights(new_mu, scale, mix_logits,
                                           memory.shape[1], memory_mask)
        context = torch.bmm(weights[:, None, :], memory).squeeze(1)
        return context, weights, new_mu
