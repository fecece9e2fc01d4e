import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from trojancavity.cli import parse_length, run
from trojancavity.errors import UsageError
from trojancavity.presets import PRESETS, preset
from trojancavity.report import read_csv


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def payload(*argv):
    code, out, err = invoke(*argv)
    assert code == 0, err
    return json.loads(out)


def strip_timestamp(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("# generated:")
             and not ln.strip().startswith('"generated"')]
    return "\n".join(lines)


class TestUnits:
    @pytest.mark.parametrize("text,value,kind", [
        ("0.32cm", 0.0032, "m"), ("1cm", 0.01, "m"), ("3mm", 0.003, "m"), ("2m", 2.0, "m"),
        ("3600a0", 3600.0, "a0"), ("7.8natural", 7.8, "natural"), ("1e-2m", 0.01, "m"),
    ])
    def test_parse(self, text, value, kind):
        v, k = parse_length(text)
        assert v == pytest.approx(value) and k == kind

    @pytest.mark.parametrize("text", ["0.32", "0.32 parsec", "cm", "", "1.2.3cm"])
    def test_rejects(self, text):
        with pytest.raises(UsageError):
            parse_length(text)


class TestCommands:
    def test_cavity(self):
        doc = payload("cavity", "--R", "0.32cm", "--L", "1cm")
        assert doc["omega"]["value"] == pytest.approx(1.97e11, rel=0.01)
        assert doc["omega"]["unit"] == "rad/s"
        assert doc["gamma"]["value"] == pytest.approx(3.24e-7, rel=0.02)
        assert set(doc["provenance"]) >= {"config_hash", "tolerances", "version", "generated"}

    def test_ground_state_from_geometry(self):
        # 3600 a0 taken literally puts q at 0.948, off the optimal 0.95625.
        doc = payload("ground-state", "--R", "0.32cm", "--L", "1cm", "--r0", "3600a0")
        assert doc["residual_norm"] < 1e-12
        assert doc["q"] == pytest.approx(0.9484, abs=1e-3)

    def test_ground_state_at_optimal_q(self):
        doc = payload("ground-state", "--R", "0.32cm", "--L", "1cm", "--q", "0.95625")
        assert doc["coefficients"]["a11"] == pytest.approx(0.51160, abs=1e-4)
        assert doc["kappa_mode"] == "consistent"

    def test_series(self):
        doc = payload("ground-state", "--method", "series", "--order", "2",
                      "--kappa-mode", "detuning", "--kappa-minus-one", "2e-11")
        assert doc["coefficients"]["a44"] == pytest.approx(0.50751, abs=1e-5)

    def test_equilibrium(self):
        doc = payload("equilibrium")
        assert doc["max_derivative"] < 1e-12 * doc["abs_Pm"]
        assert doc["abs_Pm"] == pytest.approx(1.5e6, rel=0.02)
        assert doc["stability"]["stable"] is True

    def test_dimensionless_source(self):
        doc = payload("equilibrium", "--gamma", "0.05", "--q-tilde", "40", "--q", "0.93")
        assert doc["params"]["gamma"] == 0.05 and doc["params"]["q"] == pytest.approx(0.93)

    def test_quoted_mode(self):
        doc = payload("ground-state", "--kappa-mode", "quoted")
        assert doc["kappa_minus_one"] == 1e-7 and doc["kappa_mode"] == "quoted"

    def test_energy_curve_csv(self, tmp_path):
        out = tmp_path / "e.csv"
        code, _, err = invoke("energy-curve", "--n", "20", "--format", "csv", "--out", str(out))
        assert code == 0, err
        header, rows = read_csv(out)
        assert header == ["kappa_minus_one", "r0_natural", "E_hbar_omega", "E_joule", "H_lab_check"]
        assert len(rows) == 20
        for r in rows:
            assert float(r[4]) == pytest.approx(float(r[2]), rel=1e-8)

    def test_stability_map_csv(self, tmp_path):
        out = tmp_path / "map.csv"
        code, _, err = invoke("stability-map", "--nR", "3", "--nu", "11", "--format", "csv",
                              "--out", str(out))
        assert code == 0, err
        header, rows = read_csv(out)
        assert header == ["R_m", "r0_over_3600a0", "stable", "max_real_part"]
        assert len(rows) == 33
        bheader, brows = read_csv(tmp_path / "map.boundary.csv")
        assert bheader == ["R_m", "r0_over_3600a0"] and len(brows) >= 1

    def test_wigner_sidecar(self, tmp_path):
        out = tmp_path / "w.csv"
        code, _, err = invoke("wigner", "--a-source", "table2", "--n", "21", "--format", "csv",
                              "--out", str(out))
        assert code == 0, err
        header, rows = read_csv(out)
        assert header == ["q", "p", "W"] and len(rows) == 21 * 21
        side = json.loads((tmp_path / "w.json").read_text())
        assert side["semantics"].startswith("marginal")
        assert abs(side["center"]["P"]) == pytest.approx(1.5e6, rel=0.02)

    def test_provenance_header_in_csv(self, tmp_path):
        out = tmp_path / "b.csv"
        invoke("branches", "--n", "5", "--format", "csv", "--out", str(out))
        first = out.read_text().splitlines()[0]
        assert first.startswith("# provenance: ")
        prov = json.loads(first[len("# provenance: "):])
        assert prov["subcommand"] == "branches" and len(prov["config_hash"]) == 16


class TestPresets:
    def test_names(self):
        assert set(PRESETS) == {f"fig{i}" for i in range(1, 9)} | {f"table{i}" for i in range(1, 5)}

    def test_unknown(self):
        with pytest.raises(UsageError, match="available"):
            preset("fig9")
        code, _, err = invoke("preset", "fig9")
        assert code == 2 and "fig1" in err

    def test_fig4_initial_condition(self):
        p = preset("fig4")
        assert p["momentum_offset"] == "0.02,0.07,0.02"
        assert (p["t_start"], p["t_end"]) == (1400.0, 1500.0)

    def test_fig2_branch(self):
        assert preset("fig2")["branch"] == "anti_trojan"

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_runs(self, name, tmp_path):
        out = tmp_path / f"{name}.csv"
        code, _, err = invoke("preset", name, "--format", "csv", "--out", str(out))
        assert code == 0, err
        header, rows = read_csv(out)
        assert header and rows

    def test_fig4_bounded(self, tmp_path):
        out = tmp_path / "fig4.csv"
        invoke("preset", "fig4", "--format", "csv", "--out", str(out))
        header, rows = read_csv(out)
        assert header == ["t", "x", "y", "z", "px", "py", "pz", "Qp", "Qm", "Pp", "Pm", "H"]
        data = np.array(rows, dtype=float)
        assert data[0, 0] == pytest.approx(1400.0) and data[-1, 0] == pytest.approx(1500.0)
        r = np.hypot(data[:, 1], data[:, 2])
        assert 0 < r.min() and r.max() < 2
        assert np.ptp(data[:, -1]) / abs(data[0, -1]) < 1e-6

    def test_table_presets(self):
        t2 = payload("preset", "table2")
        assert t2["coefficients"]["a14"] == pytest.approx(4.668e-6, rel=0.02)
        t4 = payload("preset", "table4")
        assert t4["field"]["<QmQm>"] == pytest.approx(94.059, rel=0.01)

    def test_preset_flag_and_override(self):
        doc = payload("ground-state", "--preset", "table1", "--order", "1")
        assert doc["method"].endswith("order 1")
        code, _, err = invoke("cavity", "--preset", "table1")
        assert code == 2


class TestExitCodes:
    def test_unknown_command(self):
        assert invoke("frobnicate")[0] == 2

    def test_bare_length(self):
        assert invoke("cavity", "--R", "0.32")[0] == 2

    def test_conflicting_sources(self):
        assert invoke("equilibrium", "--R", "0.32cm", "--gamma", "0.1")[0] == 2
        assert invoke("equilibrium", "--r0", "3600a0", "--q", "0.95")[0] == 2

    def test_nonpositive_tolerance(self):
        assert invoke("cavity", "--tol-ode", "0")[0] == 2

    def test_detuning_mode_needs_value(self):
        assert invoke("ground-state", "--kappa-mode", "detuning")[0] == 2

    def test_numerical_failure(self):
        code, _, err = invoke("ground-state", "--q", "0.5")
        assert code == 1
        diag = json.loads(err)
        assert diag["error"] == "ParameterDomainError"

    def test_close_approach_is_numerical(self, tmp_path):
        # q -> 1 removes the field force, so cancelling the orbital momentum
        # gives an almost exactly radial fall; the partial run is still written.
        out = tmp_path / "fall.csv"
        code, _, err = invoke("trajectory", "--gamma", "1e-6", "--q-tilde", "5", "--q", "0.999999",
                              "--momentum-offset", "0,-1,0", "--t-end", "50", "--format", "csv",
                              "--out", str(out))
        assert code == 1
        assert json.loads(err.splitlines()[-1])["error"] == "CloseApproachError"
        header, rows = read_csv(out)
        assert rows and float(rows[-1][0]) < 2.0


class TestDeterminism:
    @pytest.mark.parametrize("argv", [("preset", "table2"), ("branches", "--n", "7", "--format", "csv"),
                                      ("preset", "fig8", "--n", "9", "--format", "csv")])
    def test_identical_modulo_timestamp(self, argv):
        a, b = invoke(*argv)[1], invoke(*argv)[1]
        assert strip_timestamp(a) == strip_timestamp(b)

    def test_hash_ignores_timestamp_and_tracks_config(self):
        h1 = payload("cavity")["provenance"]["config_hash"]
        h2 = payload("cavity")["provenance"]["config_hash"]
        h3 = payload("cavity", "--R", "0.33cm")["provenance"]["config_hash"]
        assert h1 == h2 != h3


class TestConfigFile:
    def test_json_geometry_and_options(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"R_m": 0.0033, "L_m": 0.01, "n": 4}))
        doc = payload("branches", "--config", str(cfg))
        assert len(doc["rows"]) == 4
        cav = payload("cavity", "--config", str(cfg))
        assert cav["R_m"] == 0.0033

    def test_cli_overrides_file(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text("n = 4\n")
        assert len(payload("branches", "--config", str(cfg), "--n", "6")["rows"]) == 6

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        assert invoke("cavity", "--config", str(cfg))[0] == 2
        assert invoke("cavity", "--config", str(tmp_path / "missing.json"))[0] == 2
        cfg.write_text(json.dumps({"constants": {"hbar2": 1}}))
        assert invoke("cavity", "--config", str(cfg))[0] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "trojancavity", "cavity", "--format", "csv"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    lines = [ln for ln in res.stdout.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    assert rows[0] == ["name", "value", "unit"]
    omega = {r[0]: r[1] for r in rows[1:]}["omega"]
    assert math.isclose(float(omega), 1.965e11, rel_tol=1e-3)
