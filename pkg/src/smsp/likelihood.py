"""Dirichlet-multinomial marginal likelihood over partition blocks.

The partition's blocks are scored independently: each block of label counts m
contributes Beta(alpha + m) / Beta(alpha), where Beta is the multivariate Beta
function. Everything is done in log space via log-gamma.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln


def default_alpha(labels, label_values=None) -> np.ndarray:
    """Per-label pseudo-counts n_k / 1000 computed from the dataset's labels.

    Only labels present in the data get a component, so every alpha_k > 0.
    """
    labels = np.asarray(labels)
    if label_values is None:
        label_values = np.unique(labels)
    counts = np.array([(labels == v).sum() for v in label_values], dtype=float)
    if np.any(counts <= 0):
        raise ValueError("every label value must occur in the data")
    return counts / 1000.0


def log_beta(x) -> float:
    """Log multivariate Beta: sum(loggamma(x_k)) - loggamma(sum(x_k))."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("Beta arguments must be positive")
    return float(gammaln(x).sum() - gammaln(x.sum()))


def log_marginal_block(counts, alpha) -> float:
    """Log marginal likelihood of one block's label counts under Dirichlet(alpha)."""
    counts = np.asarray(counts, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if counts.shape != alpha.shape:
        raise ValueError("counts and alpha must have matching length")
    if np.any(counts < 0.0):
        raise ValueError("counts must be nonnegative")
    return log_beta(alpha + counts) - log_beta(alpha)


def log_likelihood(state, alpha) -> float:
    """Log marginal likelihood of the dataset labels given the partition's leaves."""
    return float(sum(log_marginal_block(sub.counts, alpha) for sub in state.leaf_subsets()))


def weight_increment(parent_counts, below_counts, above_counts, alpha) -> float:
    """Change in log likelihood from splitting one block into two.

    Only the affected block matters, so this equals the full log-likelihood
    difference between the post-split and pre-split partitions.
    """
    parent = np.asarray(parent_counts)
    below = np.asarray(below_counts)
    above = np.asarray(above_counts)
    if not np.array_equal(below + above, parent):
        raise ValueError("child counts must sum to the parent counts")
    return (
        log_marginal_block(below, alpha)
        + log_marginal_block(above, alpha)
        - log_marginal_block(parent, alpha)
    )
