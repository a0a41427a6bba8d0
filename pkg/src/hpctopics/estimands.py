"""Topic summaries: frequency, exclusivity, FREX scores, and diagnostics.

A word's exclusivity to a topic is its rate divided by its summed rate over a
comparison set (siblings by default).  The FREX score combines a word's ECDF
rank in exclusivity and in frequency within a topic through a weighted
harmonic mean, so a high score requires both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, ListTooShortError, ZeroDenominatorError
from .tree import TopicTree

DEFAULT_FREX_WEIGHT = 0.5


@dataclass(frozen=True)
class ComparisonSets:
    """Per-topic comparison sets, as node ids (always including the topic itself)."""

    mode: str
    members: tuple[tuple[int, ...], ...]  # index = topic index (node id - 1)


def comparison_sets(tree: TopicTree, mode: str = "siblings") -> ComparisonSets:
    """Comparison sets for every topic.

    ``siblings``: all children of the topic's parent; an only child is
    compared to its parent instead.  ``all``: every topic.
    """
    if mode not in ("siblings", "all"):
        raise ValueError(f"unknown comparison mode {mode!r}")
    members = []
    if mode == "all":
        everyone = tuple(tree.topic_ids)
        members = [everyone] * tree.n_topics
    else:
        for node in tree.topic_ids:
            sibs = tree.children[tree.parent[node]]
            if len(sibs) == 1:
                members.append((node, tree.parent[node]))
            else:
                members.append(tuple(sibs))
    return ComparisonSets(mode=mode, members=tuple(members))


def exclusivity(beta_nodes, sets: ComparisonSets) -> np.ndarray:
    """Per word and topic: rate divided by summed rate over the comparison set.

    ``beta_nodes`` is (V, n_nodes) in node coordinates (the root column is
    only consulted when a comparison set includes the parent node).
    """
    beta_nodes = np.asarray(beta_nodes, dtype=float)
    n_topics = len(sets.members)
    phi = np.empty((beta_nodes.shape[0], n_topics))
    for t, cols in enumerate(sets.members):
        denom = beta_nodes[:, list(cols)].sum(axis=1)
        phi[:, t] = beta_nodes[:, t + 1] / denom
    return phi


def ecdf_ranks(values) -> np.ndarray:
    """Empirical CDF rank of each value: #{values <= x} / n, ties share the upper rank."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyInputError("cannot rank an empty collection")
    order = np.sort(values)
    return np.searchsorted(order, values, side="right") / values.size


def frex(phi_ranks, mu_ranks, w: float = DEFAULT_FREX_WEIGHT) -> np.ndarray:
    """Weighted harmonic mean of exclusivity and frequency ECDF ranks."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"frex weight must lie in [0, 1], got {w}")
    phi_ranks = np.asarray(phi_ranks, dtype=float)
    mu_ranks = np.asarray(mu_ranks, dtype=float)
    return 1.0 / (w / phi_ranks + (1.0 - w) / mu_ranks)


def invert_conditional(word_given_topic, topic_priors) -> np.ndarray:
    """Bayes inversion p(topic|word) from p(word|topic) rows and topic priors.

    Lets FREX-style exclusivity be computed from externally fitted rate
    matrices whose topic marginals are not uniform.  Output has the same
    (K, V) shape; each word's column sums to 1.
    """
    p_wt = np.asarray(word_given_topic, dtype=float)
    priors = np.asarray(topic_priors, dtype=float)
    num = p_wt * priors[:, None]
    den = num.sum(axis=0)
    if np.any(den <= 0):
        bad = np.flatnonzero(den <= 0)[:5].tolist()
        raise ZeroDenominatorError(f"words with zero probability under every topic: {bad}")
    return num / den


def summary_diversity(ranked_lists, n: int) -> float:
    """Proportion of unique words across the K length-n topic summaries."""
    lists = [list(lst) for lst in ranked_lists]
    for i, lst in enumerate(lists):
        if len(lst) < n:
            raise ListTooShortError(f"topic list {i} has {len(lst)} entries, need {n}")
    seen = set()
    for lst in lists:
        seen.update(lst[:n])
    return len(seen) / (len(lists) * n)


@dataclass(frozen=True)
class StabilityProfile:
    marginal_count: np.ndarray
    max_exclusivity: np.ndarray
    max_excl_logit: np.ndarray
    lograte_variance: np.ndarray


def stability_profile(beta_matrix, marginal_counts) -> StabilityProfile:
    """Scatter coordinates for rate-stability diagnostics.

    Per word: maximum exclusivity across topics (comparison set = all topics;
    also on the logit scale), variance of log rates across topics, and the
    marginal corpus count.
    """
    beta = np.asarray(beta_matrix, dtype=float)
    counts = np.asarray(marginal_counts, dtype=float)
    phi = beta / beta.sum(axis=1, keepdims=True)
    mx = phi.max(axis=1)
    with np.errstate(divide="ignore"):
        logit = np.log(mx) - np.log1p(-mx)
    var = np.log(beta).var(axis=1)
    return StabilityProfile(counts, mx, logit, var)


def top_word_ids(scores, n: int) -> np.ndarray:
    """Word ids of the n best scores, descending; ties broken by ascending id."""
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:n]


def top_words(scores, n: int, vocab) -> list[str]:
    """Tokens of the n best scores, descending; ties broken by ascending word id."""
    if n > len(vocab):
        raise ListTooShortError(f"asked for {n} words but vocabulary has {len(vocab)}")
    return [vocab[i] for i in top_word_ids(scores, n)]


@dataclass(frozen=True)
class TopicSummary:
    """Score matrices plus per-topic orderings, all (V, K) / topic-indexed."""

    freq_mu: np.ndarray  # posterior-mean log rates over topics
    excl_phi: np.ndarray  # posterior-mean exclusivity
    freq_ranks: np.ndarray  # ECDF ranks of freq_mu within topic
    excl_ranks: np.ndarray  # ECDF ranks of excl_phi within topic
    frex: np.ndarray
    frex_order: np.ndarray  # (V, K) word ids, best first, per topic
    freq_order: np.ndarray
    weight: float

    @property
    def n_topics(self) -> int:
        return self.frex.shape[1]

    def frex_positions(self) -> np.ndarray:
        """1-based rank position of each word by FREX within each topic."""
        pos = np.empty_like(self.frex_order)
        v = self.frex_order.shape[0]
        for t in range(self.n_topics):
            pos[self.frex_order[:, t], t] = np.arange(1, v + 1)
        return pos


def build_topic_summary(mu_hat, phi_hat, w: float = DEFAULT_FREX_WEIGHT) -> TopicSummary:
    """Rank posterior-mean log rates and exclusivities into FREX scores.

    ``mu_hat`` is (V, n_nodes) in node coordinates; ``phi_hat`` is (V, K).
    Frequency is ranked on posterior-mean log rates (ranks are unchanged by
    the monotone map to the rate scale).
    """
    mu_hat = np.asarray(mu_hat, dtype=float)
    phi_hat = np.asarray(phi_hat, dtype=float)
    n_topics = phi_hat.shape[1]
    freq_mu = mu_hat[:, 1:]
    freq_ranks = np.empty_like(phi_hat)
    excl_ranks = np.empty_like(phi_hat)
    for t in range(n_topics):
        freq_ranks[:, t] = ecdf_ranks(freq_mu[:, t])
        excl_ranks[:, t] = ecdf_ranks(phi_hat[:, t])
    scores = frex(excl_ranks, freq_ranks, w)
    v = phi_hat.shape[0]
    frex_order = np.empty((v, n_topics), dtype=np.int64)
    freq_order = np.empty((v, n_topics), dtype=np.int64)
    for t in range(n_topics):
        frex_order[:, t] = top_word_ids(scores[:, t], v)
        freq_order[:, t] = top_word_ids(freq_mu[:, t], v)
    return TopicSummary(
        freq_mu=freq_mu,
        excl_phi=phi_hat,
        freq_ranks=freq_ranks,
        excl_ranks=excl_ranks,
        frex=scores,
        frex_order=frex_order,
        freq_order=freq_order,
        weight=w,
    )
