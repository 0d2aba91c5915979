"""End-to-end tests of the command line driver.

Everything goes through cli.main with an argv list (no subprocesses), writing
into pytest tmp_path directories.
"""

import json
import math
import os

import numpy as np
import pytest

from conftest import circle
from sobcurve.cli import (
    fitted_slope,
    main,
    parse_eps_rule,
    parse_tau_rule,
    resolve_curve,
)
from sobcurve.curve import load_curve, pad, save_curve
from sobcurve.metric import sobolev_norm


class TestResolveCurve:
    def test_builtin_circle_default(self):
        c = resolve_curve("circle")
        np.testing.assert_allclose(c.coeffs, circle().coeffs)

    def test_builtin_circle_radius(self):
        c = resolve_curve("circle:2.5")
        np.testing.assert_allclose(c.coeffs, circle(radius=2.5).coeffs)

    def test_builtin_ellipse(self):
        c = resolve_curve("ellipse:2,0.5")
        assert c.cos_coeffs[1, 0] == 2.0
        assert c.sin_coeffs[0, 1] == 0.5

    def test_star_is_the_advertised_shape(self):
        # r(theta) = 1 + 0.3 cos(5 theta) times (cos theta, sin theta)
        c = resolve_curve("star")
        theta = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        r = 1.0 + 0.3 * np.cos(5.0 * theta)
        expected = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        np.testing.assert_allclose(c.eval(theta), expected, atol=1e-12)

    def test_normal5_is_modulated_normal(self):
        c = resolve_curve("normal5")
        theta = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
        expected = np.sin(5.0 * theta)[:, None] * np.stack(
            [np.cos(theta), np.sin(theta)], axis=1
        )
        np.testing.assert_allclose(c.eval(theta), expected, atol=1e-12)

    def test_file_path_wins(self, tmp_path):
        path = tmp_path / "c.json"
        save_curve(circle(radius=3.0), str(path))
        c = resolve_curve(str(path))
        np.testing.assert_allclose(c.coeffs, circle(radius=3.0).coeffs)

    def test_unknown_name_raises(self):
        with pytest.raises(ValueError):
            resolve_curve("dodecagon")


class TestRuleParsing:
    def test_eps_constant(self):
        rule = parse_eps_rule("0.05")
        assert rule(4) == 0.05
        assert rule(512) == 0.05

    def test_eps_one_over_k(self):
        rule = parse_eps_rule("1/K")
        assert rule(8) == pytest.approx(0.125)

    def test_eps_inverse_sqrt(self):
        rule = parse_eps_rule("1/sqrt(K)")
        assert rule(16) == pytest.approx(0.25)

    def test_eps_scaled_three_halves(self):
        rule = parse_eps_rule("2*K^-3/2")
        assert rule(4) == pytest.approx(0.25)

    @pytest.mark.parametrize("bad", ["-1", "0", "K", "eps/K"])
    def test_eps_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_eps_rule(bad)

    def test_tau_powers(self):
        assert parse_tau_rule("tau")(0.25) == 0.25
        assert parse_tau_rule("tau^2")(0.5) == pytest.approx(0.25)
        assert parse_tau_rule("tau^3/2")(0.5) == pytest.approx(0.0625)

    def test_tau_constant(self):
        assert parse_tau_rule("1e-3")(0.5) == 1e-3


def test_fitted_slope_recovers_power_law():
    ks = [4, 8, 16, 32, 64]
    errs = [10.0 * k**-1.5 for k in ks]
    assert fitted_slope(ks, errs) == pytest.approx(1.5, abs=1e-12)


class TestSingleCommands:
    def test_geodesic_writes_nodes_and_manifest(self, tmp_path, capsys):
        rc = main([
            "geodesic", "--in-a", "circle", "--in-b", "circle:1.2",
            "-K", "4", "-N", "6", "--out", str(tmp_path),
        ])
        assert rc == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["nodes"] == [f"node_{j:04d}.json" for j in range(5)]
        first = load_curve(str(tmp_path / "node_0000.json"))
        np.testing.assert_allclose(first.coeffs, pad(circle(), 6).coeffs)
        out = capsys.readouterr().out
        assert "energy=" in out and "iterations=" in out and "grad_norm=" in out

    def test_geodesic_identical_endpoints(self, tmp_path, capsys):
        rc = main([
            "geodesic", "--in-a", "circle", "--in-b", "circle",
            "-K", "4", "--out", str(tmp_path),
        ])
        assert rc == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["iterations"] == 0
        assert abs(manifest["energy"]) < 1e-14

    def test_log_then_exp_round_trip(self, tmp_path):
        assert main([
            "log", "--in-a", "circle", "--in-b", "circle:1.1",
            "-N", "6", "--out", str(tmp_path),
        ]) == 0
        assert main([
            "exp", "--in-a", "circle",
            "--in-v", str(tmp_path / "log_result.json"),
            "-K", "2", "-N", "6", "--out", str(tmp_path),
        ]) == 0
        end = load_curve(str(tmp_path / "exp_result.json"))
        target = pad(circle(radius=1.1), end.order)
        assert sobolev_norm(end - target, 2) < 1e-10

    def test_transport_writes_alphas(self, tmp_path, capsys):
        rc = main([
            "transport", "--in-a", "circle", "--in-b", "circle:1.2",
            "--in-v", "normal5", "-K", "4", "-N", "8", "--out", str(tmp_path),
        ])
        assert rc == 0
        lines = (tmp_path / "transport_alphas.csv").read_text().splitlines()
        assert lines[0].startswith("# ")
        assert lines[1] == "k,alpha"
        assert len(lines) == 2 + 4  # one row per rung
        assert "alpha_drift_max=" in capsys.readouterr().out

    def test_curvature_prints_kappa(self, tmp_path, capsys):
        rc = main([
            "curvature", "--in-a", "circle", "--in-v", "cosx", "--in-w", "cosy",
            "--weights", "1,1,1", "-N", "12", "-K", "16", "--centered",
            "--out", str(tmp_path),
        ])
        assert rc == 0
        result = json.loads((tmp_path / "curvature_result.json").read_text())
        # tau = 1/16 sits within a couple percent of -31/(117 pi)
        assert result["kappa"] == pytest.approx(-31.0 / (117.0 * math.pi), rel=0.03)
        assert "kappa=" in capsys.readouterr().out

    def test_covderiv_runs_both_quotients(self, tmp_path):
        base = ["covderiv", "--in-a", "circle", "--in-v", "mixv",
                "--in-w", "mixw", "-K", "50", "--out", str(tmp_path)]
        assert main(base) == 0
        one_sided = load_curve(str(tmp_path / "covderiv_result.json"))
        assert main(base + ["--centered"]) == 0
        central = load_curve(str(tmp_path / "covderiv_result.json"))
        # different quotients, same limit: close but not identical
        assert 0.0 < sobolev_norm(central - one_sided, 0) < 0.1


class TestErrorExits:
    def test_unknown_shape_is_config_error(self, tmp_path, capsys):
        rc = main(["geodesic", "--in-a", "circle", "--in-b", "wibble",
                   "-K", "2", "--out", str(tmp_path)])
        assert rc == 2
        assert "error[config]" in capsys.readouterr().err

    def test_degenerate_plane_is_package_error(self, tmp_path, capsys):
        rc = main(["curvature", "--in-a", "circle", "--in-v", "cosx",
                   "--in-w", "cosx", "-K", "8", "--weights", "1,1,1",
                   "--out", str(tmp_path)])
        assert rc == 1
        assert "error[degenerate-plane]" in capsys.readouterr().err

    def test_reg_without_epsilon(self, tmp_path, capsys):
        rc = main(["log", "--in-a", "circle", "--in-b", "circle:1.1",
                   "--kind", "reg", "--out", str(tmp_path)])
        assert rc == 2
        assert "--epsilon" in capsys.readouterr().err

    def test_epsilon_with_rat_rejected(self, tmp_path):
        rc = main(["log", "--in-a", "circle", "--in-b", "circle:1.1",
                   "--epsilon", "0.1", "--out", str(tmp_path)])
        assert rc == 2

    def test_unsorted_k_list(self, tmp_path, capsys):
        rc = main(["sweep-exp", "--in-a", "circle", "--in-v", "mixv",
                   "--K-list", "8,4", "--out", str(tmp_path)])
        assert rc == 2
        assert "strictly increasing" in capsys.readouterr().err

    def test_weights_order_mismatch(self, tmp_path):
        rc = main(["log", "--in-a", "circle", "--in-b", "circle:1.1",
                   "--m", "3", "--out", str(tmp_path)])
        assert rc == 2

    def test_quadrature_too_coarse(self, tmp_path):
        rc = main(["log", "--in-a", "circle", "--in-b", "circle:1.1",
                   "-N", "8", "-M", "16", "--out", str(tmp_path)])
        assert rc == 2

    def test_oracle_sweep_requires_unit_circle(self, tmp_path, capsys):
        rc = main(["sweep-covderiv", "--in-a", "circle:2", "--in-v", "mixv",
                   "--in-w", "mixw", "--K-list", "4,8", "--out", str(tmp_path)])
        assert rc == 2
        assert "unit circle" in capsys.readouterr().err


class TestSweeps:
    def test_curvature_sweep_csv_shape_and_determinism(self, tmp_path, capsys):
        argv = ["sweep-curvature", "--in-v", "cosx", "--in-w", "cosy",
                "--weights", "1,1,1", "-N", "10", "--K-list", "4,8,16",
                "--centered"]
        assert main(argv + ["--out", str(tmp_path / "a")]) == 0
        os.environ["SOBCURVE_THREADS"] = "1"
        try:
            assert main(argv + ["--out", str(tmp_path / "b")]) == 0
        finally:
            del os.environ["SOBCURVE_THREADS"]
        text_a = (tmp_path / "a" / "sweep_curvature.csv").read_bytes()
        text_b = (tmp_path / "b" / "sweep_curvature.csv").read_bytes()
        assert text_a == text_b  # worker count must not leak into the output

        lines = text_a.decode().splitlines()
        assert lines[0].startswith("# ")
        assert "K_list=4,8,16" in lines[0]
        assert lines[1] == "K,kappa,err"
        assert len(lines) == 2 + 3 + 2  # config, header, rows, 2 trailing comments
        assert lines[-1].startswith("# fitted_slope_final_half=")
        errs = [float(line.split(",")[2]) for line in lines[2:5]]
        assert errs == sorted(errs, reverse=True)

    def test_covderiv_sweep_reg_rate(self, tmp_path, capsys):
        rc = main(["sweep-covderiv", "--in-v", "mixv", "--in-w", "mixw",
                   "--kind", "reg", "--epsilon", "1/K", "-N", "10",
                   "--K-list", "8,16,32,64", "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        slope = float(out.split("fitted_slope=")[1])
        assert 0.7 <= slope <= 1.3  # eps = tau bias converges first order

    def test_exp_sweep_against_self_reference(self, tmp_path):
        rc = main(["sweep-exp", "--in-a", "circle", "--in-v", "mixv",
                   "--K-list", "2,4,8", "--ref", "self:64", "-N", "6",
                   "--out", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "sweep_exp.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[2:5]]
        assert [int(r[0]) for r in rows] == [2, 4, 8]
        errs = [float(r[1]) for r in rows]
        assert errs == sorted(errs, reverse=True)

    def test_geodesic_sweep_second_order(self, tmp_path, capsys):
        rc = main(["sweep-geodesic", "--in-a", "circle", "--in-b", "circle:1.2",
                   "--K-list", "2,4,8", "--ref", "self:64", "-N", "6",
                   "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        slope = float(out.split("fitted_slope=")[1])
        assert slope > 1.5
        lines = (tmp_path / "sweep_geodesic.csv").read_text().splitlines()
        assert lines[1] == "K,err_L2,err_W1,err_W2"

    def test_geodesic_sweep_rejects_low_reference(self, tmp_path):
        rc = main(["sweep-geodesic", "--in-a", "circle", "--in-b", "circle:1.2",
                   "--K-list", "2,4,8", "--ref", "self:8", "--out", str(tmp_path)])
        assert rc == 2

    def test_transport_sweep_runs(self, tmp_path):
        rc = main(["sweep-transport", "--in-a", "circle", "--in-b", "circle:1.2",
                   "--in-v", "normal5", "--K-list", "2,4,8", "--ref", "self:32",
                   "-N", "6", "--out", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "sweep_transport.csv").read_text().splitlines()
        errs = [float(line.split(",")[1]) for line in lines[2:5]]
        assert errs[-1] < errs[0]
