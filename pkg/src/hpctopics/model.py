"""Model parameters, the generative simulator, and conditional log densities.

Word side: each word f has log rates ``mu[f, :]`` over all tree nodes (node 0
is the corpus-level rate) and per-parent diffusion variances ``tau2``.  Rates
are ``beta = exp(mu)``.  Document side: each document has a length-K affinity
vector ``xi`` whose sigmoid gives label probabilities and whose softmax over
the labeled topics gives the Poisson mixing weights ``theta``.

Counts follow ``w_fd ~ Pois(l_d * theta_d @ beta_f)`` with the normalized
length ``l_d`` as exposure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.special import digamma, expit, gammaln, polygamma

from . import kernels
from .corpus import Corpus
from .errors import (
    AllLabelsInactiveError,
    NoConvergenceError,
    NonFiniteValueError,
    NonPositiveSampleError,
    NonPositiveVarianceError,
)
from .tree import TopicTree

# Poisson draws with astronomically large rates (possible under extreme
# heavy-tailed variance draws) are clipped to keep the generator finite.
MAX_POISSON_RATE = 1e12

_WORD_STREAM = 11
_DOC_STREAM = 12


@dataclass
class Hyperparams:
    """Corpus-level parameters of the generative process."""

    psi: float  # corpus log-rate mean
    gamma2: float  # corpus log-rate variance
    nu: float  # tau2 prior degrees of freedom
    sigma2: float  # tau2 prior scale
    eta: np.ndarray  # affinity prior mean, length K
    lambda2: float  # affinity prior variance (isotropic)

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        for name in ("gamma2", "nu", "sigma2", "lambda2"):
            if not getattr(self, name) > 0:
                raise NonPositiveVarianceError(f"{name} must be positive, got {getattr(self, name)}")

    def tau_gamma_params(self) -> tuple[float, float]:
        """(shape, scale) of the Gamma law followed by 1/tau2."""
        return self.nu / 2.0, 2.0 / (self.nu * self.sigma2)

    @staticmethod
    def nu_sigma2_from_gamma(kappa: float, lam: float) -> tuple[float, float]:
        """Inverse of :meth:`tau_gamma_params`."""
        return 2.0 * kappa, 1.0 / (kappa * lam)


@dataclass
class GenerativeConfig:
    """Size and length settings for simulation."""

    n_docs: int
    n_words: int
    length_rate: float  # expected raw token total per document
    mean_length: float  # normalizer: exposure l_d = raw_length / mean_length
    seed: int = 0

    def __post_init__(self):
        if not self.length_rate > 0 or not self.mean_length > 0:
            raise NonPositiveVarianceError("length_rate and mean_length must be positive")


@dataclass
class SimulationResult:
    corpus: Corpus
    mu: np.ndarray  # (V, N) true log rates
    tau2: np.ndarray  # (V, P) true variances, columns follow tree.parent_ids
    xi: np.ndarray  # (D, K) true affinities


def theta_from(xi, labels) -> np.ndarray:
    """Mixing weights: softmax of ``xi`` over the active labels, zero elsewhere."""
    xi = np.asarray(xi, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    act = np.flatnonzero(labels)
    if act.size == 0:
        raise AllLabelsInactiveError("at least one label must be active")
    xa = xi[act]
    e = np.exp(xa - xa.max())
    theta = np.zeros_like(xi)
    theta[act] = e / e.sum()
    return theta


def theta_jacobian(xi) -> np.ndarray:
    """Jacobian d theta / d xi of the softmax on the given (sub)vector."""
    xi = np.asarray(xi, dtype=float)
    e = np.exp(xi - xi.max())
    t = e / e.sum()
    return np.diag(t) - np.outer(t, t)


# --- rate conditional (one word) -----------------------------------------


class RateData:
    """Observations entering one word's rate conditional.

    Holds the corpus exposure vector ``sum_d l_d theta_d`` in node
    coordinates, the list of documents where the word appears with their
    counts, and a CSR layout of every document's mixing weights (node ids and
    values), indexed by document id.
    """

    def __init__(self, exposure_node, docs, counts, th_indptr, th_nodes, th_vals):
        self.exposure_node = np.ascontiguousarray(exposure_node, dtype=float)
        self.docs = np.ascontiguousarray(docs, dtype=np.int64)
        self.counts = np.ascontiguousarray(counts, dtype=float)
        self.th_indptr = np.ascontiguousarray(th_indptr, dtype=np.int64)
        self.th_nodes = np.ascontiguousarray(th_nodes, dtype=np.int64)
        self.th_vals = np.ascontiguousarray(th_vals, dtype=float)

    @classmethod
    def from_dense(cls, counts, lengths, theta_nodes) -> "RateData":
        """Build from dense per-document arrays.

        ``counts``: (D,) word counts; ``lengths``: (D,) normalized lengths;
        ``theta_nodes``: (D, N) mixing weights in node coordinates (zeros at
        the root and at unlabeled topics).
        """
        counts = np.asarray(counts, dtype=float)
        lengths = np.asarray(lengths, dtype=float)
        theta_nodes = np.asarray(theta_nodes, dtype=float)
        exposure = lengths @ theta_nodes
        indptr = [0]
        nodes = []
        vals = []
        for d in range(theta_nodes.shape[0]):
            nz = np.flatnonzero(theta_nodes[d])
            nodes.extend(nz.tolist())
            vals.extend(theta_nodes[d, nz].tolist())
            indptr.append(len(nodes))
        docs = np.flatnonzero(counts)
        return cls(exposure, docs, counts[docs], indptr, nodes, vals)

    def kernel_args(self):
        return (self.exposure_node, self.docs, self.counts, self.th_indptr, self.th_nodes, self.th_vals)


def logpost_rates(mu, data: RateData, lam, psi) -> float:
    """Unnormalized log conditional posterior of one word's log rates."""
    mu = np.ascontiguousarray(mu, dtype=float)
    lp, _ = kernels.rate_logpost_grad(mu, *data.kernel_args(), np.ascontiguousarray(lam, dtype=float), float(psi))
    if np.isnan(lp):
        raise NonFiniteValueError("rate log posterior evaluated to NaN")
    return lp


def grad_rates(mu, data: RateData, lam, psi) -> np.ndarray:
    """Analytic gradient of :func:`logpost_rates`."""
    mu = np.ascontiguousarray(mu, dtype=float)
    _, g = kernels.rate_logpost_grad(mu, *data.kernel_args(), np.ascontiguousarray(lam, dtype=float), float(psi))
    return g


def rate_likelihood_grad(mu, data: RateData) -> tuple[float, np.ndarray]:
    """Poisson part only (no tree prior) of the rate conditional."""
    mu = np.ascontiguousarray(mu, dtype=float)
    return kernels.rate_logpost_grad(mu, *data.kernel_args(), None, 0.0)


def rate_likelihood_hessian(mu, data: RateData) -> np.ndarray:
    """Analytic Hessian of the Poisson likelihood in log-rate space.

    Equals ``-(Theta' W Theta) o beta beta' + diag(likelihood gradient)`` with
    ``W = diag(w_d / s_d^2)`` over the documents where the word appears.
    """
    mu = np.ascontiguousarray(mu, dtype=float)
    n = mu.shape[0]
    beta = np.exp(mu)
    _, g_lik = rate_likelihood_grad(mu, data)
    hess = np.diag(g_lik)
    m = data.docs.shape[0]
    if m:
        theta_dense = np.zeros((m, n))
        for j, d in enumerate(data.docs):
            lo, hi = data.th_indptr[d], data.th_indptr[d + 1]
            theta_dense[j, data.th_nodes[lo:hi]] = data.th_vals[lo:hi]
        s = np.maximum(theta_dense @ beta, 1e-300)
        a = theta_dense * np.sqrt(data.counts / s**2)[:, None]
        hess -= (a.T @ a) * np.outer(beta, beta)
    return hess


def hess_rates(mu, data: RateData, lam) -> np.ndarray:
    """Analytic Hessian of the full rate conditional (likelihood minus prior precision)."""
    return rate_likelihood_hessian(mu, data) - np.asarray(lam, dtype=float)


# --- affinity conditional (one document) ----------------------------------


class DocData:
    """Observations entering one document's affinity conditional."""

    def __init__(self, word_idx, counts, length, labels):
        self.word_idx = np.ascontiguousarray(word_idx, dtype=np.int64)
        self.counts = np.ascontiguousarray(counts, dtype=float)
        self.length = float(length)
        self.labels = np.asarray(labels, dtype=bool)
        if not self.labels.any():
            raise AllLabelsInactiveError("document must have at least one active label")
        self.active = np.ascontiguousarray(np.flatnonzero(self.labels), dtype=np.int64)
        self.labels_f = self.labels.astype(float)

    @classmethod
    def from_dense(cls, counts, length, labels) -> "DocData":
        counts = np.asarray(counts, dtype=float)
        nz = np.flatnonzero(counts)
        return cls(nz, counts[nz], length, labels)


def _affinity_args(xi, doc: DocData, beta, eta, lambda2):
    beta = np.asarray(beta, dtype=float)
    b_act = np.ascontiguousarray(beta[np.ix_(doc.word_idx, doc.active)])
    colsum_act = np.ascontiguousarray(beta[:, doc.active].sum(axis=0))
    return (
        np.ascontiguousarray(xi, dtype=float),
        doc.active,
        b_act,
        doc.counts,
        colsum_act,
        doc.length,
        doc.labels_f,
        np.ascontiguousarray(eta, dtype=float),
        1.0 / float(lambda2),
    )


def logpost_affinity(xi, doc: DocData, beta, eta, lambda2, include_bern=True) -> float:
    """Unnormalized log conditional posterior of one document's affinities."""
    lp, _ = kernels.affinity_logpost_grad(*_affinity_args(xi, doc, beta, eta, lambda2), include_bern, True)
    if np.isnan(lp):
        raise NonFiniteValueError("affinity log posterior evaluated to NaN")
    return lp


def grad_affinity(xi, doc: DocData, beta, eta, lambda2, include_bern=True) -> np.ndarray:
    """Analytic gradient of :func:`logpost_affinity` (full length-K vector)."""
    _, g = kernels.affinity_logpost_grad(*_affinity_args(xi, doc, beta, eta, lambda2), include_bern, True)
    return g


def hess_affinity_numeric(
    xi,
    doc: DocData,
    beta,
    eta,
    lambda2,
    include_prior: bool = True,
    step_scale: float = 1e-4,
) -> np.ndarray:
    """Central-difference Hessian of the analytic affinity gradient.

    Differenced over the active coordinates only (the Poisson terms do not
    involve inactive ones); returns the symmetrized active block.  With
    ``include_prior=False`` the Gaussian prior term is left out, giving the
    likelihood-only curvature used for mass matrices.
    """
    xi = np.asarray(xi, dtype=float).copy()
    args = _affinity_args(xi, doc, beta, eta, lambda2)[1:]
    act = doc.active
    ka = act.shape[0]
    hess = np.empty((ka, ka))
    for i, k in enumerate(act):
        h = step_scale * (1.0 + abs(xi[k]))
        xp = xi.copy()
        xp[k] += h
        _, gp = kernels.affinity_logpost_grad(np.ascontiguousarray(xp), *args, True, include_prior)
        xm = xi.copy()
        xm[k] -= h
        _, gm = kernels.affinity_logpost_grad(np.ascontiguousarray(xm), *args, True, include_prior)
        hess[:, i] = (gp[act] - gm[act]) / (2.0 * h)
    return 0.5 * (hess + hess.T)


# --- variance hyperparameter density (A gamma law for 1/tau2) --------------


def _check_inv_tau2(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0 or not np.all(x > 0):
        raise NonPositiveSampleError("inverse-variance samples must be positive and nonempty")
    return x


def tau_hyper_loglik(kappa, lam, inv_tau2_samples):
    """Gamma log likelihood of the inverse variances with its gradient and
    Hessian in the original (kappa, lambda) scale."""
    x = _check_inv_tau2(inv_tau2_samples)
    n = x.size
    slog = float(np.log(x).sum())
    s = float(x.sum())
    val = (kappa - 1.0) * slog - n * kappa * np.log(lam) - n * gammaln(kappa) - s / lam
    grad = np.array(
        [
            slog - n * np.log(lam) - n * digamma(kappa),
            -n * kappa / lam + s / lam**2,
        ]
    )
    hess = np.array(
        [
            [-n * polygamma(1, kappa), -n / lam],
            [-n / lam, n * kappa / lam**2 - 2.0 * s / lam**3],
        ]
    )
    return val, grad, hess


def logpost_tau_hyper(log_kappa, log_lambda, inv_tau2_samples):
    """Log density, gradient and Hessian in (log kappa, log lambda) space.

    The flat prior sits on the log scale, so the value equals the Gamma log
    likelihood at (kappa, lambda) and derivatives follow by the chain rule.
    """
    kappa = float(np.exp(log_kappa))
    lam = float(np.exp(log_lambda))
    val, g, h = tau_hyper_loglik(kappa, lam, inv_tau2_samples)
    grad = np.array([kappa * g[0], lam * g[1]])
    hess = np.array(
        [
            [kappa * g[0] + kappa**2 * h[0, 0], kappa * lam * h[0, 1]],
            [kappa * lam * h[0, 1], lam * g[1] + lam**2 * h[1, 1]],
        ]
    )
    return val, grad, hess


def lambda_mle_given_kappa(inv_tau2_samples, kappa) -> float:
    """Closed-form scale maximizer of the Gamma likelihood at fixed shape."""
    x = _check_inv_tau2(inv_tau2_samples)
    return float(x.mean() / kappa)


def tau_profile_mode(inv_tau2_samples, max_expand: int = 60) -> tuple[float, float]:
    """Joint (kappa, lambda) maximizer of the Gamma likelihood.

    The scale is profiled out analytically; the shape solves
    ``log(kappa) - digamma(kappa) = log(mean) - mean(log)`` which is strictly
    decreasing, so a bracketed root find converges.
    """
    x = _check_inv_tau2(inv_tau2_samples)
    if x.size < 2:
        raise NonPositiveSampleError("need at least two samples to fit both parameters")
    s = float(np.log(x.mean()) - np.log(x).mean())
    if not np.isfinite(s) or s <= 1e-13:
        raise NoConvergenceError("samples are (nearly) identical; shape MLE diverges")

    def f(kappa):
        return np.log(kappa) - digamma(kappa) - s

    k0 = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    lo, hi = k0 / 2.0, k0 * 2.0
    for _ in range(max_expand):
        if f(lo) > 0:
            break
        lo /= 2.0
    else:
        raise NoConvergenceError("could not bracket the shape MLE from below")
    for _ in range(max_expand):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NoConvergenceError("could not bracket the shape MLE from above")
    kappa = float(brentq(f, lo, hi, xtol=1e-12, rtol=1e-14))
    return kappa, lambda_mle_given_kappa(x, kappa)


# --- generative simulator --------------------------------------------------


def _parents_topdown(tree: TopicTree) -> list[int]:
    return sorted(tree.parent_ids, key=lambda p: (tree.levels[p], p))


def draw_word_params(rng, tree: TopicTree, hyper: Hyperparams):
    """One word's log rates and variances, diffused down the tree."""
    n = tree.n_nodes
    mu = np.empty(n)
    mu[0] = hyper.psi + np.sqrt(hyper.gamma2) * rng.standard_normal()
    parents = _parents_topdown(tree)
    tau2 = np.empty(len(tree.parent_ids))
    col = {p: i for i, p in enumerate(tree.parent_ids)}
    for p in parents:
        t2 = hyper.nu * hyper.sigma2 / rng.chisquare(hyper.nu)
        tau2[col[p]] = t2
        sd = np.sqrt(t2)
        for c in tree.children[p]:
            mu[c] = mu[p] + sd * rng.standard_normal()
    return mu, tau2


def draw_doc_params(rng, hyper: Hyperparams):
    """One document's affinity vector and label vector (at least one active)."""
    k = hyper.eta.shape[0]
    sd = np.sqrt(hyper.lambda2)
    while True:
        xi = hyper.eta + sd * rng.standard_normal(k)
        labels = rng.random(k) < expit(xi)
        if labels.any():
            return xi, labels


def simulate_corpus(tree: TopicTree, hyper: Hyperparams, gen: GenerativeConfig) -> SimulationResult:
    """Draw a corpus from the generative process.

    Word parameters diffuse down the tree; documents draw affinities, labels
    (redrawn if all-zero, conditioning on at least one active label), a raw
    length ``~ Pois(length_rate)`` (redrawn if zero so every document is
    loadable), and Poisson counts with exposure ``raw_length / mean_length``.
    Deterministic given the seed: each word and document owns its own stream.
    """
    if hyper.eta.shape[0] != tree.n_topics:
        raise NonFiniteValueError("eta length must equal the number of topics")
    v_words, n_docs = gen.n_words, gen.n_docs
    n = tree.n_nodes
    k = tree.n_topics
    mu = np.empty((v_words, n))
    tau2 = np.empty((v_words, len(tree.parent_ids)))
    for f in range(v_words):
        rng = np.random.default_rng(np.random.SeedSequence([gen.seed, _WORD_STREAM, f]))
        mu[f], tau2[f] = draw_word_params(rng, tree, hyper)
    beta = np.exp(mu[:, 1:])  # (V, K) topic-space rates

    xi = np.empty((n_docs, k))
    labels = np.zeros((n_docs, k), dtype=bool)
    raw_lengths = np.empty(n_docs)
    rows, cols, vals = [], [], []
    for d in range(n_docs):
        rng = np.random.default_rng(np.random.SeedSequence([gen.seed, _DOC_STREAM, d]))
        xi[d], labels[d] = draw_doc_params(rng, hyper)
        while True:
            raw = rng.poisson(gen.length_rate)
            if raw > 0:
                break
        raw_lengths[d] = raw
        theta = theta_from(xi[d], labels[d])
        rates = (raw / gen.mean_length) * (beta @ theta)
        np.minimum(rates, MAX_POISSON_RATE, out=rates)
        w = rng.poisson(rates)
        nz = np.flatnonzero(w)
        rows.extend([d] * nz.size)
        cols.extend(nz.tolist())
        vals.extend(w[nz].tolist())

    counts = sp.csr_matrix(
        (np.asarray(vals, dtype=np.int64), (rows, cols)), shape=(n_docs, v_words), dtype=np.int64
    )
    vocab = tuple(f"w{f:05d}" for f in range(v_words))
    corpus = Corpus(
        counts=counts,
        labels=labels,
        raw_lengths=raw_lengths,
        mean_length=float(gen.mean_length),
        vocab=vocab,
        explicit_lengths=True,
    )
    return SimulationResult(corpus, mu, tau2, xi)
