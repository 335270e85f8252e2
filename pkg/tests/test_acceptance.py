"""Acceptance suite: every shipped claim checked at its stated tolerance.

Each criterion prints one PASS/FAIL line (echoed again in the terminal
summary). Criteria that need the real benchmark datasets skip with a SKIP
line when the files are not present locally; see the README for where to put
them. The waveform problem is generated from its published recipe, so those
criteria always run.
"""

import os
import subprocess
import sys

import numpy as np
import pytest

import acceptance_log
import ucitools
from sobol_oracle import ishigami, ishigami_total_indices_analytic, sobol_total_indices

from safs import dataset as dsm
from safs import efast, experiment, fnn, saliency
from safs.dataset import load_csv

# Canonical acceptance seeds. Training is per-sample SGD with the fixed
# published learning rate, so individual runs wobble by a point or two of
# accuracy; these seeds are fixed up front and every waveform criterion is
# checked at them with stock defaults.
WAVEFORM_SEEDS = (15, 16, 26)

# Frozen output of the Monte-Carlo oracle below (seed 20250810, 40960 base
# samples = 204800 evaluations); recomputed live and compared before use.
ORACLE_SEED = 20250810
ORACLE_N_BASE = 40960
FROZEN_ORACLE_ST = np.array([0.56822746, 0.44036632, 0.24469367])


def check(criterion, ok, detail):
    acceptance_log.record(criterion, "PASS" if ok else "FAIL", detail)
    assert ok, f"{criterion}: {detail}"


def skip(criterion, why):
    acceptance_log.record(criterion, "SKIP", why)
    pytest.skip(why)


def data_file(name):
    """Locate a real benchmark dataset file, or None if absent."""
    candidates = [os.environ.get("SAFS_DATA_DIR"), os.path.join(os.path.dirname(__file__), "..", "data")]
    for base in candidates:
        if base:
            path = os.path.join(base, name)
            if os.path.exists(path):
                return path
    return None


@pytest.fixture(scope="module")
def waveform_raw(waveform_csv):
    return load_csv(waveform_csv, "class")


@pytest.fixture(scope="module")
def waveform_pipelines(waveform_raw):
    return {
        seed: experiment.run_pipeline(waveform_raw, seed=seed, top_k=11,
                                      dataset_name="waveform", workers=4)
        for seed in WAVEFORM_SEEDS
    }


class TestC1EfastOracleEquivalence:
    def test_ishigami_vs_monte_carlo(self):
        live = sobol_total_indices(ishigami, [(-np.pi, np.pi)] * 3, ORACLE_N_BASE, ORACLE_SEED)
        assert np.allclose(live, FROZEN_ORACLE_ST, atol=1e-8), "oracle drifted from frozen values"
        assert np.abs(live - ishigami_total_indices_analytic()).max() < 0.02

        space = efast.InputSpace(ranges=((-np.pi, np.pi),) * 3)
        te = efast.total_effects(ishigami, space, efast.EfastConfig())
        worst = float(np.abs(te - FROZEN_ORACLE_ST).max())
        check(
            "C1 efast-oracle-equivalence",
            worst <= 0.05,
            f"max |efast - oracle| = {worst:.4f} (tol 0.05); efast={np.round(te, 4).tolist()}",
        )


class TestC2PureFactorIdentity:
    def test_sine_of_one_factor_with_dummies(self):
        space = efast.InputSpace(ranges=((-np.pi, np.pi),) * 6)
        worst_active = 1.0
        worst_dummy = 0.0
        for h in range(6):
            te = efast.total_effects(lambda X, h=h: np.sin(X[:, h]), space, efast.EfastConfig())
            worst_active = min(worst_active, te[h])
            worst_dummy = max(worst_dummy, max(te[j] for j in range(6) if j != h))
        check(
            "C2 pure-factor-identity",
            worst_active >= 0.98 and worst_dummy <= 0.02,
            f"min active TE {worst_active:.4f} (>=0.98), max dummy TE {worst_dummy:.4f} (<=0.02)",
        )


class TestC3GradientCorrectness:
    def test_backward_vs_central_differences(self):
        rng = np.random.default_rng(7)
        eps = 1e-5
        worst = 0.0
        for _ in range(100):
            H, N, K = (int(v) for v in rng.integers(1, 9, 3))
            params = fnn.init_params(H, N, K, seed=int(rng.integers(1 << 30)))
            x = rng.normal(0.0, 1.5, H)
            label = int(rng.integers(K))
            grads = fnn.backward(params, x, label)
            for name in ("W", "B0", "V", "B1"):
                base = getattr(params, name)
                for idx in np.ndindex(base.shape):
                    def ce_with(value):
                        mats = {n: np.array(getattr(params, n)) for n in ("W", "B0", "V", "B1")}
                        mats[name][idx] = value
                        _, probs = fnn.forward(fnn.NetworkParams(**mats), x)
                        return fnn.cross_entropy(probs, label)

                    numeric = (ce_with(base[idx] + eps) - ce_with(base[idx] - eps)) / (2 * eps)
                    analytic = getattr(grads, name)[idx]
                    scale = max(abs(numeric), abs(analytic), 1e-8)
                    worst = max(worst, abs(numeric - analytic) / scale)
        check(
            "C3 gradient-correctness",
            worst <= 1e-4,
            f"max relative error over 100 networks = {worst:.2e} (tol 1e-4)",
        )


class TestC4TableReproduction:
    def test_waveform(self, waveform_pipelines):
        row = waveform_pipelines[WAVEFORM_SEEDS[0]].comparison
        assert row.full_feature_count == 21
        assert row.selected_feature_count == 11
        ok_full = abs(row.full_accuracy - 85.04) <= 2.0
        ok_subset = abs(row.selected_accuracy - row.full_accuracy) <= 2.0
        check(
            "C4 waveform",
            ok_full and ok_subset,
            f"full(21) {row.full_accuracy:.2f}% vs 85.04 (tol 2.0); "
            f"top-11 {row.selected_accuracy:.2f}% vs own full (tol 2.0)",
        )

    def test_mushrooms(self):
        path = data_file("agaricus-lepiota.data")
        if path is None:
            skip("C4 mushrooms", "agaricus-lepiota.data not present (no network egress here)")
        ds = ucitools.load_mushrooms(path)
        assert (ds.n_samples, ds.n_features, ds.n_classes) == (8124, 21, 2)
        full, sub = _compare_top_k(ds, k=7, seed=WAVEFORM_SEEDS[0])
        check(
            "C4 mushrooms",
            full >= 99.5 and sub >= 99.0,
            f"full(21) {full:.2f}% (>=99.5); top-7 {sub:.2f}% (>=99.0)",
        )

    def test_diabetes(self):
        path = data_file("pima-indians-diabetes.data")
        if path is None:
            skip("C4 diabetes", "pima-indians-diabetes.data not present (no network egress here)")
        ds = ucitools.load_diabetes(path)
        assert (ds.n_samples, ds.n_features, ds.n_classes) == (768, 8, 2)
        full, sub = _compare_top_k(ds, k=2, seed=WAVEFORM_SEEDS[0])
        check(
            "C4 diabetes",
            abs(sub - full) <= 3.0,
            f"full(8) {full:.2f}%; top-2 {sub:.2f}% (tol 3.0 vs full)",
        )

    def test_yeast(self):
        path = data_file("yeast.data")
        if path is None:
            skip("C4 yeast", "yeast.data not present (no network egress here)")
        ds = ucitools.load_yeast(path)
        assert (ds.n_samples, ds.n_features, ds.n_classes) == (1484, 8, 10)
        full, sub = _compare_top_k(ds, k=6, seed=WAVEFORM_SEEDS[0])
        check(
            "C4 yeast",
            abs(sub - full) <= 2.5,
            f"full(8) {full:.2f}%; top-6 {sub:.2f}% (tol 2.5 vs full)",
        )

    def test_letter(self):
        path = data_file("letter-recognition.data")
        if path is None:
            skip("C4 letter", "letter-recognition.data not present (no network egress here)")
        ds = ucitools.load_letter(path)
        assert (ds.n_samples, ds.n_features, ds.n_classes) == (20000, 16, 26)
        full, sub = _compare_top_k(ds, k=11, seed=WAVEFORM_SEEDS[0])
        check(
            "C4 letter",
            abs(sub - full) <= 2.5,
            f"full(16) {full:.2f}%; top-11 {sub:.2f}% (tol 2.5 vs full)",
        )


def _compare_top_k(ds, k, seed):
    """Defaults-only train/rank/select/compare, mirroring the pipeline seeds."""
    norm, _ = dsm.normalize_split(dsm.split(ds, seed=seed + experiment.SPLIT_SEED_OFFSET))
    cfg = fnn.TrainConfig(seed=seed + experiment.TRAIN_SEED_OFFSET)
    report = fnn.train(norm, cfg)
    space = efast.InputSpace(ranges=norm.train.feature_ranges)
    contrib = saliency.compute_report(
        report.best_params, space,
        efast.EfastConfig(seed=seed + experiment.EFAST_SEED_OFFSET),
        ds.feature_names, workers=4,
    )
    row = experiment.compare(norm, saliency.select_top_k(contrib, k), cfg)
    return row.full_accuracy, row.selected_accuracy


class TestC5SaliencyRankingQualitative:
    def test_waveform_fig2_ranking(self, waveform_pipelines):
        details = []
        ok = True
        for seed, result in waveform_pipelines.items():
            ranking_1b = [h + 1 for h in result.contribution_report.ranking]
            pos = {f: ranking_1b.index(f) + 1 for f in (10, 11, 1, 2)}
            seed_ok = pos[10] <= 4 and pos[11] <= 4 and pos[1] >= 16 and pos[2] >= 16
            ok = ok and seed_ok
            details.append(f"seed {seed}: rank(f10)={pos[10]} rank(f11)={pos[11]} "
                           f"rank(f1)={pos[1]} rank(f2)={pos[2]}")
        check(
            "C5 saliency-ranking",
            ok,
            "features 10,11 in top 4 and 1,2 in bottom 6 at each seed; " + "; ".join(details),
        )


class TestC6DescendingDominance:
    def test_waveform_dominance(self, waveform_pipelines):
        details = []
        ok = True
        for seed, result in waveform_pipelines.items():
            asc = sum(s.test_accuracy for s in result.ascending.steps)
            desc = sum(s.test_accuracy for s in result.descending.steps)
            ok = ok and desc > asc
            details.append(f"seed {seed}: descending {desc:.2f} vs ascending {asc:.2f}")
        check("C6 waveform-dominance", ok, "; ".join(details))

    def test_mushrooms_dominance(self):
        path = data_file("agaricus-lepiota.data")
        if path is None:
            skip("C6 mushrooms-dominance", "agaricus-lepiota.data not present (no network egress here)")
        raw = ucitools.mushrooms_raw(path)
        details = []
        ok = True
        for seed in WAVEFORM_SEEDS:
            result = experiment.run_pipeline(raw, seed=seed, top_k=7,
                                             dataset_name="mushrooms", workers=4)
            asc = sum(s.test_accuracy for s in result.ascending.steps)
            desc = sum(s.test_accuracy for s in result.descending.steps)
            ok = ok and desc > asc
            details.append(f"seed {seed}: descending {desc:.2f} vs ascending {asc:.2f}")
        check("C6 mushrooms-dominance", ok, "; ".join(details))


class TestC7PropertySuite:
    def test_contribution_normalization_and_clamping(self, waveform_pipelines):
        ok = True
        for result in waveform_pipelines.values():
            report = result.contribution_report
            ok = ok and abs(report.contributions.sum() - 1.0) <= 1e-9
            ok = ok and report.te_matrix.min() >= 0.0 and report.te_matrix.max() <= 1.0
        check("C7 contribution-properties", ok,
              "sum(C_h) = 1 within 1e-9 and all TE within [0,1] on every report")

    def test_split_determinism_and_partition(self):
        rng = np.random.default_rng(123)
        ds = dsm.Dataset(
            features=rng.normal(size=(233, 5)),
            labels=rng.integers(0, 3, 233),
            feature_names=tuple(f"f{i}" for i in range(5)),
            class_names=("a", "b", "c"),
            feature_ranges=((-9.0, 9.0),) * 5,
        )
        a = dsm.split(ds, seed=77)
        b = dsm.split(ds, seed=77)
        identical = all(
            np.array_equal(getattr(a, part).features, getattr(b, part).features)
            and np.array_equal(getattr(a, part).labels, getattr(b, part).labels)
            for part in ("train", "validation", "test")
        )
        combined = sorted(map(tuple, np.vstack(
            [a.train.features, a.validation.features, a.test.features])))
        partition = combined == sorted(map(tuple, ds.features))
        check("C7 split-properties", identical and partition,
              f"identical reruns: {identical}; partition preserved: {partition}")

    def test_stepwise_prefix_property(self, waveform_pipelines):
        ok = True
        for result in waveform_pipelines.values():
            for curve in (result.ascending, result.descending):
                for t, step in enumerate(curve.steps):
                    ok = ok and len(step.features) == t + 1
                    if t:
                        ok = ok and step.features[:-1] == curve.steps[t - 1].features
                ok = ok and set(curve.steps[-1].features) == set(range(21))
        check("C7 stepwise-prefix", ok, "every step extends the previous subset by one feature")

    def test_worker_count_does_not_change_artifacts(self, signal_noise_csv, tmp_path):
        outputs = {}
        for workers in (1, 8):
            out = tmp_path / f"w{workers}"
            argv = [
                sys.executable, "-m", "safs.cli", "reproduce", str(signal_noise_csv),
                "--label", "class", "--seed", "5", "--top-k", "1",
                "--workers", str(workers), "--out", str(out),
            ]
            proc = subprocess.run(argv, capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outputs[workers] = {
                name: (out / name).read_bytes() for name in sorted(os.listdir(out))
            }
        same = outputs[1] == outputs[8]
        check("C7 worker-independence", same,
              f"--workers 1 vs --workers 8 wrote byte-identical artifacts: {same}")
