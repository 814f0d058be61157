import math

import numpy as np
import pytest

from pdhp.corpus import Document, encode
from pdhp.datagen import GenerationSpec, generate_corpus
from pdhp.errors import ConfigError, OrderingError
from pdhp.evaluation import nmi
from pdhp.inference import (
    Cluster,
    FitConfig,
    Particle,
    effective_sample_size,
    fit,
    posterior_over_clusters,
    resample,
    step,
)
from pdhp.language_model import ClusterWordCounts, DocCounts, dm_log_predictive, update_counts
from pdhp.point_process import ClusterDynamics, intensity, sample_candidates, update_dynamics
from pdhp.prior import pdhp_prior


def tiny_model(r=1.0, vocab=6, **kw):
    return FitConfig(r=r, theta0_v=0.5, **kw).model(vocab)


def hand_particle(model):
    """Two clusters with known words and events."""
    p = Particle()
    specs = [([0.0, 2.0], [0, 0, 1, 2], [[0.4, 0.3, 0.8]]), ([1.0], [3, 4, 4], [[1.2, 0.1, 0.2]])]
    for cid, (times, words, w) in enumerate(specs, 1):
        dyn = ClusterDynamics(np.array(w))
        for t in times:
            update_dynamics(dyn, model.basis, t)
        counts = update_counts(ClusterWordCounts(), DocCounts.from_indices(words))
        p.clusters[cid] = Cluster(dyn, counts)
        p.assignments.extend([cid] * len(times))
    p.next_id = 3
    p.last_time = 2.0
    return p


class TestPosterior:
    def test_no_clusters(self):
        model = tiny_model()
        ids, lp, norm = posterior_over_clusters(Particle(), 0.0, DocCounts.from_indices([1, 2]), model)
        assert ids == [] and lp.tolist() == [0.0]
        assert norm == pytest.approx(dm_log_predictive(ClusterWordCounts(), DocCounts.from_indices([1, 2]),
                                                       model.dm))

    @pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 3.0])
    def test_composition_oracle(self, r):
        model = tiny_model(r=r)
        p = hand_particle(model)
        doc = DocCounts.from_indices([0, 4, 5])
        t = 6.5
        # independent composition in probability space
        lam = [intensity(p.clusters[c].dynamics, model.basis, t) for c in (1, 2)]
        prior = pdhp_prior(lam, model.prior)
        text = [math.exp(dm_log_predictive(p.clusters[c].words, doc, model.dm)) for c in (1, 2)]
        text.append(math.exp(dm_log_predictive(ClusterWordCounts(), doc, model.dm)))
        joint = np.array(text) * prior
        ids, lp, norm = posterior_over_clusters(p, t, doc, model)
        assert ids == [1, 2]
        np.testing.assert_allclose(lp, np.log(joint / joint.sum()), atol=1e-10)
        assert norm == pytest.approx(math.log(joint.sum()), abs=1e-10)

    def test_uniform_at_r0_for_identical_clusters(self):
        model = tiny_model(r=0.0)
        p = Particle()
        for cid, times in ((1, [0.0, 1.0, 2.0]), (2, [5.0])):
            dyn = ClusterDynamics(np.array([[1.0, 1.0, 1.0]]))
            for t in times:
                update_dynamics(dyn, model.basis, t)
            p.clusters[cid] = Cluster(dyn, update_counts(ClusterWordCounts(), DocCounts.from_indices([1, 1, 3])))
        _, lp, _ = posterior_over_clusters(p, 7.0, DocCounts.from_indices([1, 2]), model)
        assert lp[0] == pytest.approx(lp[1], abs=1e-14)

    def test_r0_ignores_time(self):
        model = tiny_model(r=0.0)
        p = hand_particle(model)
        doc = DocCounts.from_indices([0, 1])
        a = posterior_over_clusters(p, 3.0, doc, model)[1]
        b = posterior_over_clusters(p, 300.0, doc, model)[1]
        np.testing.assert_array_equal(a, b)

    def test_out_of_order(self):
        model = tiny_model()
        p = hand_particle(model)
        with pytest.raises(OrderingError):
            posterior_over_clusters(p, 1.5, DocCounts.from_indices([0]), model)


class TestStep:
    def test_first_document_creates_cluster_one(self):
        model = tiny_model()
        p = step(Particle(), 0.0, DocCounts.from_indices([1, 2]), model, np.random.default_rng(0))
        assert p.assignments == [1] and list(p.clusters) == [1]

    def test_weight_increment_is_marginal(self):
        model = tiny_model()
        p = hand_particle(model)
        doc = DocCounts.from_indices([2, 3])
        _, _, norm = posterior_over_clusters(p, 4.0, doc, model)
        step(p, 4.0, doc, model, np.random.default_rng(1))
        assert p.log_weight == pytest.approx(norm, abs=1e-15)
        c = p.assignments[-1]
        assert p.clusters[c].dynamics.event_times[-1] == 4.0

    def test_ids_never_reused(self):
        model = tiny_model(r=1.0, lambda0=1e6)  # new clusters almost surely
        p = Particle()
        rng = np.random.default_rng(0)
        for i in range(6):
            step(p, float(i), DocCounts.from_indices([i % 6]), model, rng)
        assert p.assignments == [1, 2, 3, 4, 5, 6]

    def test_sampling_frequencies(self):
        model = tiny_model(r=1.0)
        base = hand_particle(model)
        doc = DocCounts.from_indices([0, 3])
        _, lp, _ = posterior_over_clusters(base, 5.0, doc, model)
        rng = np.random.default_rng(3)
        n = 4000
        counts = np.zeros(3)
        for _ in range(n):
            p = base.copy()
            step(p, 5.0, doc, model, rng)
            counts[min(p.assignments[-1], 3) - 1] += 1
        probs = np.exp(lp)
        assert np.all(np.abs(counts / n - probs) < 4 * np.sqrt(probs * (1 - probs) / n) + 1e-12)


def reference_greedy(corpus, config):
    """Standalone greedy loop: argmax of text x prior, one hypothesis, no resampling."""
    vocab, docs = encode(corpus)
    model = config.model(vocab.size)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[0])
    clusters = {}
    out = []
    for d, doc in zip(corpus, docs):
        ids = list(clusters)
        lam = [intensity(clusters[c][0], model.basis, d.timestamp) for c in ids]
        prior = pdhp_prior(lam, model.prior)
        with np.errstate(divide="ignore"):
            logs = [dm_log_predictive(clusters[c][1], doc, model.dm) for c in ids]
            logs.append(dm_log_predictive(ClusterWordCounts(), doc, model.dm))
            score = np.array(logs) + np.log(prior)
        best = int(np.argmax(score))
        if best == len(ids):
            cid = len(clusters) + 1
            cands = sample_candidates(model.candidate_scale, model.n_candidates, model.basis.size, rng)
            clusters[cid] = (ClusterDynamics(cands), ClusterWordCounts())
        else:
            cid = ids[best]
        update_dynamics(clusters[cid][0], model.basis, d.timestamp)
        update_counts(clusters[cid][1], doc)
        out.append(cid)
    return out


@pytest.fixture(scope="module")
def small_corpus():
    return generate_corpus(GenerationSpec(horizon=80.0, textual_overlap=0.5, seed=3))


class TestFit:
    def test_empty(self):
        res = fit([], FitConfig())
        assert res.assignments == [] and res.clusters == {}

    def test_single_doc(self):
        res = fit([Document(7, 1.0, ("a", "b"))], FitConfig())
        assert res.assignments == [1] and res.doc_ids == [7]

    def test_unsorted(self):
        docs = [Document(0, 2.0, ("a",)), Document(1, 1.0, ("b",))]
        with pytest.raises(OrderingError):
            fit(docs, FitConfig())

    def test_ties_processed_in_order(self):
        docs = [Document(i, 1.0, ("a", "b")) for i in range(3)]
        assert len(fit(docs, FitConfig(mode="greedy")).assignments) == 3

    @pytest.mark.parametrize("r", [0.0, 1.0, 3.0])
    def test_single_greedy_particle_matches_reference(self, small_corpus, r):
        cfg = FitConfig(r=r, n_particles=1, mode="greedy", seed=4)
        assert fit(small_corpus.documents, cfg).assignments == reference_greedy(small_corpus.documents, cfg)

    def test_deterministic(self, small_corpus):
        cfg = FitConfig(r=1.5, n_particles=4, seed=11)
        a, b = fit(small_corpus.documents, cfg), fit(small_corpus.documents, cfg)
        assert a.assignments == b.assignments
        assert a.particle_log_weights == b.particle_log_weights

    def test_thread_count_invariant(self, small_corpus):
        base = fit(small_corpus.documents, FitConfig(r=1.0, n_particles=4, seed=2))
        threaded = fit(small_corpus.documents, FitConfig(r=1.0, n_particles=4, seed=2, n_threads=3))
        assert base.assignments == threaded.assignments
        assert base.particle_log_weights == threaded.particle_log_weights
        assert base.metadata == threaded.metadata

    def test_result_shape(self, small_corpus):
        res = fit(small_corpus.documents, FitConfig(n_particles=3, seed=0))
        assert len(res.assignments) == len(small_corpus)
        assert set(res.assignments) == set(res.clusters)
        assert sum(len(s.event_times) for s in res.clusters.values()) == len(small_corpus)
        assert len(res.particle_log_weights) == 3

    def test_easy_corpus_single_seed(self):
        c = generate_corpus(GenerationSpec(horizon=150.0, seed=0))
        res = fit(c.documents, FitConfig(r=1.0, seed=0))
        assert nmi(res.assignments, c.temporal_labels) > 0.8

    @pytest.mark.parametrize("kw", [dict(n_particles=0), dict(ess_threshold=0.0), dict(ess_threshold=1.5),
                                    dict(mode="map"), dict(r=-1.0), dict(lambda0=0.0),
                                    dict(kernel_means=(3.0, 2.0))])
    def test_invalid_config(self, kw):
        with pytest.raises(ConfigError):
            FitConfig(**kw)


class TestEss:
    def test_uniform(self):
        assert effective_sample_size([0.0] * 8) == pytest.approx(8.0)

    def test_single(self):
        assert effective_sample_size([-math.inf, 0.0, -math.inf]) == pytest.approx(1.0)

    def test_two_of_four(self):
        assert effective_sample_size([math.log(0.5)] * 2 + [-math.inf] * 2) == pytest.approx(2.0)

    def test_scale_invariant(self):
        assert effective_sample_size([-1000.0, -1000.0]) == pytest.approx(2.0)

    def test_all_dead(self):
        with pytest.raises(ValueError):
            effective_sample_size([-math.inf, -math.inf])


def tagged_particles(log_weights):
    out = []
    for i, lw in enumerate(log_weights):
        p = Particle()
        p.assignments = [i]
        p.log_weight = lw
        out.append(p)
    return out


class TestResample:
    def test_single_particle(self):
        out = resample(tagged_particles([-3.0]), np.random.default_rng(0))
        assert [p.assignments for p in out] == [[0]]

    def test_degenerate_weights(self):
        out = resample(tagged_particles([0.0] + [-math.inf] * 5), np.random.default_rng(0))
        assert [p.assignments[0] for p in out] == [0] * 6

    def test_equal_weights_copy_counts(self):
        P, trials = 8, 10_000
        rng = np.random.default_rng(123)
        counts = np.zeros((trials, P))
        ps = tagged_particles([0.0] * P)
        for k in range(trials):
            for p in resample(ps, rng):
                counts[k, p.assignments[0]] += 1
        mean = counts.mean(axis=0)
        se = counts.std(axis=0, ddof=1) / math.sqrt(trials) + 1e-12
        assert np.all(np.abs(mean - 1.0) <= 3 * se)

    def test_expected_copies_follow_weights(self):
        w = np.array([0.5, 0.3, 0.15, 0.05])
        rng = np.random.default_rng(5)
        trials = 5000
        counts = np.zeros(4)
        for _ in range(trials):
            for p in resample(tagged_particles(np.log(w)), rng):
                counts[p.assignments[0]] += 1
        np.testing.assert_allclose(counts / trials, 4 * w, atol=0.03)

    def test_weights_reset_and_ess(self):
        out = resample(tagged_particles([0.0, -1.0, -2.0, -0.5]), np.random.default_rng(2))
        assert all(p.log_weight == 0.0 for p in out)
        assert effective_sample_size([p.log_weight for p in out]) == pytest.approx(4.0)

    def test_copies_are_isolated(self):
        model = tiny_model()
        base = hand_particle(model)
        out = resample([base, base.copy()], np.random.default_rng(0))
        step(out[0], 9.0, DocCounts.from_indices([0, 1]), model, np.random.default_rng(0))
        other = out[1]
        assert len(other.assignments) == 3
        assert other.clusters[1].words.total == 4 and other.clusters[1].dynamics.event_times == [0.0, 2.0]
        assert base.clusters[1].words.total == 4 and len(base.assignments) == 3
