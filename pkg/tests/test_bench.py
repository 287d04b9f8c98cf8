import numpy as np
import pytest

from cscadmm.bench import (
    BenchResult,
    check_agreement,
    bench_z_update,
    dense_kernel,
    flop_ratio,
    make_inputs,
)
from cscadmm.csc import z_update_direct, z_update_sherman_morrison
from cscadmm.exceptions import AgreementFailure

from .conftest import rel_err


def test_dense_kernel_matches_direct():
    w, d, s = make_inputs(3, 2, (6, 6), seed=1)
    assert rel_err(dense_kernel(w, d, s, 0.5), z_update_direct(w, d, s, 0.5)) < 1e-12


def test_small_agreement_k1():
    results = bench_z_update(1, 1, (4, 4), reps=10)
    assert [r.kernel for r in results] == ["direct", "sherman_morrison", "dense"]
    for r in results:
        assert r.repetitions == 10 and r.median_seconds > 0 and r.stddev_seconds >= 0
    assert results[0].model_flops == 9 * 16 and results[1].model_flops == 11 * 16
    assert results[2].model_flops is None


def test_reps_floor():
    with pytest.raises(ValueError):
        bench_z_update(1, 1, (4, 4), reps=3)


def test_agreement_gate_raises():
    w, d, s = make_inputs(2, 1, (4, 4))
    good = z_update_direct(w, d, s, 1.0)
    bad = good.copy()
    bad[0, 0, 0, 0] += 1e-3
    with pytest.raises(AgreementFailure, match="sherman_morrison"):
        check_agreement(w, d, s, 1.0, {"direct": good, "sherman_morrison": bad})


def test_agreement_sampled_dense_catches_shared_error():
    w, d, s = make_inputs(2, 1, (4, 4))
    wrong = z_update_direct(w, d, s, 2.0)  # both fast kernels at the wrong rho
    with pytest.raises(AgreementFailure, match="dense"):
        check_agreement(w, d, s, 1.0, {"direct": wrong, "sherman_morrison": wrong})


def test_agreement_passes():
    w, d, s = make_inputs(4, 3, (8, 5))
    outs = {"direct": z_update_direct(w, d, s, 1.0),
            "sherman_morrison": z_update_sherman_morrison(w, d, s, 1.0)}
    check_agreement(w, d, s, 1.0, outs)


def test_flop_ratio_examples():
    assert flop_ratio(16, 1) == pytest.approx(161 / 114)
    assert flop_ratio(16, 10) == pytest.approx(1169 / 699)
    assert flop_ratio(1, 1) == pytest.approx(11 / 9)


def test_result_as_dict():
    r = BenchResult("direct", 1, 1, 4, 10, 1.0, 1.0, 0.0, 9)
    assert r.as_dict()["kernel"] == "direct"


def test_inputs_deterministic():
    a = make_inputs(2, 1, (5, 5), seed=4)
    b = make_inputs(2, 1, (5, 5), seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
