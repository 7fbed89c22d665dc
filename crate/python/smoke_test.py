"""Smoke test for the qphi_py extension module.

Build and install first, e.g.
    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""

import json
import math

import qphi_py as q


def main():
    theta = q.Angle("surd:sqrt2")
    value, err = theta.value(200)
    assert abs(value - math.sqrt(2)) < 1e-15 and err < 1e-50
    assert theta.continued_fraction(5) == ["1", "2", "2", "2", "2"]
    frac, _ = theta.frac_multiple(2)
    assert abs(frac - (2 * math.sqrt(2) - 2)) < 1e-15

    a = q.Param("polar:2@0")
    pts = a.root_test(theta, [1000, 100000])
    assert abs(pts[-1]["value"] - 2.0) < 0.02

    s = q.Series(["polar:2@0", "combo:1/5,1/2"], ["polar:3@0"], "surd:sqrt2")
    assert s.validate() == []
    pred = s.predicted_radius()
    assert pred["case_tag"] == "unit_bad_approx" and pred["value"]["exact"] == "3/2"
    emp = s.empirical_radius(10000)
    assert abs(emp["estimate"] / 1.5 - 1) < 0.1
    ratio = s.term_ratio(3, 0j)
    assert ratio["modulus"] == 0.0
    assert s.partial_sum(0j, 10)["sum"] == [1.0, 0.0]

    check = q.verify_sqrt2_inequality(100000)
    assert check["holds"] and check["argmin_m"] == 2

    assert abs(q.closed_form_integral(2.0) - math.log(2)) < 1e-15
    rep = q.singular_average_report(theta, 20000)
    assert rep["envelope_holds"] and rep["bookkeeping_holds"]

    cert = q.liouville_check_small([2, 2], 3, 2)
    assert cert["holds"]

    code, out, _ = q.run_cli(["sqrt2-check", "--max-m", "1000"])
    assert code == 0 and json.loads(out)["report"]["check"]["holds"]
    code, _, _ = q.run_cli(["frobnicate"])
    assert code == 2

    try:
        q.Angle("surd:sqrt4")
    except ValueError:
        pass
    else:
        raise AssertionError("rational angle accepted")

    print(f"qphi_py {q.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
