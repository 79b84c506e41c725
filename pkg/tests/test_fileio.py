import json

import numpy as np
import pytest

from adasplit import (
    Affine, BallIndicator, BoxIndicator, HuberGrad, LinearPSD, Problem, ScaledIdentity,
    Shifted, SubdiffL1, SubdiffQuadratic, ZeroMap, ZeroOp, gen, plan_for, solve,
)
from adasplit.fileio import (
    ProblemFileError, dump_problem, load_problem, parse_problem, problem_to_dict,
    report_to_dict, write_report, write_trace,
)
from adasplit.problems import TAGS, quad3


def catalog_problems():
    q = np.array([[2.0, 0.5], [0.5, 1.0]])
    yield Problem(ZeroOp(), ZeroOp(), ZeroMap(), 2)
    yield Problem(ScaledIdentity(0.1), SubdiffL1(0.3), HuberGrad(0.7, [1.0, -1.0]), 2)
    yield Problem(Affine(q, [1.0, 2.0]), BoxIndicator([-1, -2], [1, 0.5]), LinearPSD(q, [0, 1]), 2)
    yield Problem(Shifted(SubdiffQuadratic(q, [0.1, 1 / 3]), -0.25), BallIndicator(1.5),
                  ZeroMap(), 2)
    for tag in TAGS:
        yield gen(tag, 3, 5, oracle=False).problem
        yield gen(tag, 3, 5, "neutral", oracle=False).problem


def test_round_trip_byte_identical():
    for pb in catalog_problems():
        text = dump_problem(pb, x0=np.linspace(-1, 1, pb.dim), params={"gamma": 0.3})
        again = dump_problem(parse_problem(text))
        assert again == text
        assert text.endswith("\n") and "\r" not in text


def test_round_trip_preserves_values():
    pb = gen("P-L1", 3, 1, oracle=False).problem
    back = parse_problem(dump_problem(pb)).problem
    assert np.array_equal(back.a.Q, pb.a.Q) and np.array_equal(back.c.Q, pb.c.Q)
    assert back.b.w == pb.b.w
    assert (back.alpha, back.beta, back.sigma) == pytest.approx((pb.alpha, pb.beta, pb.sigma))


def test_canonical_form_is_sorted_json():
    text = dump_problem(quad3((1.0, 4.0, 7.0)))
    d = json.loads(text)
    assert list(d) == sorted(d)
    assert text == dump_problem(parse_problem(json.dumps(d, indent=7)))


def base_dict():
    return problem_to_dict(quad3((1.0, 4.0, 7.0)))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["operator_a"].update(color="red"),
    lambda d: d["operator_b"].update(kind="nuclear"),
    lambda d: d.update(params={"gamma": 1.0, "lr": 0.1}),
    lambda d: d.pop("cocoercive_c"),
    lambda d: d.update(dim=0),
    lambda d: d.update(dim=True),
    lambda d: d.update(x0=[1.0, 2.0]),
    lambda d: d["operator_a"].update(Q=[[1.0], [2.0, 3.0]]),
    lambda d: d["operator_a"].update(Q=[["1"]]),
    lambda d: d["cocoercive_c"].update(Q=[[-1.0]]),
    lambda d: d["operator_a"].pop("q"),
])
def test_invalid_documents_rejected(mutate):
    d = base_dict()
    mutate(d)
    with pytest.raises(ProblemFileError):
        parse_problem(json.dumps(d))


def test_malformed_text_rejected():
    for text in ("", "{", "[1, 2]", "null"):
        with pytest.raises(ProblemFileError):
            parse_problem(text)


def test_load_from_disk(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(dump_problem(quad3((1.0, 4.0, 7.0)), x0=[2.0]))
    pf = load_problem(path)
    assert pf.x0.tolist() == [2.0] and pf.params is None


def test_report_and_trace(tmp_path):
    pb = quad3((1.0, 4.0, 7.0))
    rep = solve(pb, plan_for(pb), [0.0])
    write_report(rep, tmp_path / "r.json")
    write_trace(rep, tmp_path / "t.csv")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["status"] == "converged" and d["shadow"] == pytest.approx([4.0])
    assert set(d["plan"]) == {"gamma", "delta", "lambda", "eta", "eta_star", "regime"}
    assert d == report_to_dict(rep)
    lines = (tmp_path / "t.csv").read_text().split("\n")
    assert lines[0] == "n,residual,sqrt_n_times_residual,kkt"
    assert lines[-1] == "" and len(lines) == rep.n_iter + 3
    n, r, sr, k = lines[5].split(",")
    assert int(n) == 4 and float(sr) == pytest.approx(2.0 * float(r), rel=1e-15)
    assert float(r) == rep.residuals[4] and float(k) == rep.kkts[4]
