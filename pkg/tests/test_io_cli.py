import hashlib
import json
import subprocess
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from bvpp_sim import cli, config, io
from bvpp_sim.bems import TariffSet
from bvpp_sim.cli import main
from bvpp_sim.errors import ConfigError, NegativeProfitWarning
from bvpp_sim.grid import LoadProfile, NetLoadProfile, TimeGrid
from bvpp_sim.pipeline import cmd_case1

HOUSE = {
    "id": "h1",
    "solar_capacity": 4.0,
    "appliances": [
        {"id": "tv", "name": "tv", "rated_power": 0.2, "duration": 3, "preferred_start": 19, "activation_prob": 0.9},
        {"id": "wm", "name": "washing machine", "rated_power": 1.0, "duration": 2, "window": [7, 20], "preferred_start": 12,
         "activation_prob": 0.8, "jitter_std": 1.0, "noisy": True},
    ],
}


def scenario(tmp_path, **over):
    data = {"seed": 7, "grid": {"interval_minutes": 60, "num_days": 1}, "fleet": {"households": [HOUSE]},
            "bess": {"capacity": 20.0, "max_charge": 5.0, "max_discharge": 5.0}, "output_dir": "out"}
    data.update(over)
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def digest(root, exclude=("manifest.json",)):
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(Path(root).rglob("*")) if p.is_file() and p.name not in exclude}


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(x):
    assert float(io.fmt(x)) == x


def test_fmt_prefers_nine_decimals():
    assert io.fmt(0.5) == "0.500000000" and io.fmt(0) == "0.000000000" and io.fmt(0.1 + 0.2) == repr(0.1 + 0.2)


def test_profile_and_tariff_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    g = TimeGrid(30, 2)
    profiles = {"a": LoadProfile(rng.uniform(0, 3, g.length) * 1.7, g), "b": LoadProfile(np.zeros(g.length), g)}
    solar = LoadProfile(rng.uniform(0, 5, g.length) / 3, g)
    io.write_profiles(tmp_path / "p.csv", profiles, solar)
    back, sol = io.read_profiles(tmp_path / "p.csv", g)
    assert list(back) == ["a", "b"] and all(back[k] == profiles[k] for k in profiles) and sol == solar
    t = TariffSet(rng.uniform(0.1, 0.5, 24), rng.uniform(0, 0.05, 24), rng.uniform(0.1, 0.5, 24) + 0.1)
    io.write_tariffs(tmp_path / "t.csv", t)
    assert io.read_tariffs(tmp_path / "t.csv") == t
    net = NetLoadProfile(rng.normal(0, 2, g.length), g)
    io.write_net_load(tmp_path / "n.csv", net)
    assert io.read_net_load(tmp_path / "n.csv", g) == net


def test_atomic_write_leaves_partial_on_failure(tmp_path):
    target = tmp_path / "x.csv"
    with pytest.raises(RuntimeError):
        with io.atomic_open(target) as fh:
            fh.write("half")
            raise RuntimeError
    assert not target.exists() and (tmp_path / "x.csv.partial").exists()


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"grid": {"interval_minutes": 7}}, "grid.interval_minutes"),
        ({"grid": {"colour": 1}}, "grid.colour"),
        ({"bess": {"capacity": 10.0, "max_charge": 1.0}}, "bess.max_discharge"),
        ({"case2": {"clusters": 1}}, "case2.clusters"),
        ({"fleet": {"households": [{**HOUSE, "appliances": [{**HOUSE["appliances"][1], "duration": 0}]}]}},
         "fleet.households[0].appliances[0].duration"),
        ({"fleet": {"households": [{**HOUSE, "appliances": [{**HOUSE["appliances"][0], "name": "jacuzzi"}]}]}},
         "fleet.households[0].appliances[0].name"),
        ({"tariffs": {"tou": [0.1] * 5, "fit": [0.0] * 5, "market_price": [0.2] * 5}}, "tariffs.tou"),
    ],
)
def test_config_errors_name_the_field(tmp_path, patch, field):
    with pytest.raises(ConfigError) as err:
        config.load(scenario(tmp_path, **patch))
    assert err.value.field == field


def test_config_hash_sensitivity(tmp_path):
    base = config.load(scenario(tmp_path)).hash()
    assert config.load(scenario(tmp_path)).hash() == base
    for patch in ({"seed": 8}, {"bess": {"capacity": 21.0, "max_charge": 5.0, "max_discharge": 5.0}},
                  {"case2": {"flag_k": 1.5}}, {"grid": {"interval_minutes": 30}}):
        assert config.load(scenario(tmp_path, **patch)).hash() != base
    assert config.load(scenario(tmp_path), seed_override=99).hash() != base


def test_cli_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_cli_exit_codes(tmp_path):
    assert main(["validate-config", "--config", str(scenario(tmp_path))]) == 0
    assert main(["validate-config", "--config", str(scenario(tmp_path, grid={"interval_minutes": 7}))]) == 2
    assert main(["validate-config", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_generate_rows_and_determinism(tmp_path):
    cfg = scenario(tmp_path)
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    _, rows = io.read_csv(tmp_path / "a" / "profiles" / "h1.csv")
    assert len(rows) == 24
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["stages"]["generate"]["files"] == ["profiles/h1.csv"]


def test_case1_empty_fleet(tmp_path):
    cfg = scenario(tmp_path, fleet={})
    assert main(["case1", "--config", str(cfg)]) == 0
    s = json.loads((tmp_path / "out" / "case1" / "settlement.json").read_text())
    assert s["revenue"] == 0 and s["operator_profit"] == 0 and s["building_payments"] == {}


def test_case1_outputs(tmp_path):
    cfg = config.load(scenario(tmp_path))
    res = cmd_case1(cfg)
    s = res["settlement"]
    assert abs(s.operator_profit + sum(s.building_payments.values()) - s.market_revenue) <= 1e-9
    header, rows = io.read_csv(cfg.output_dir / "case1" / "schedules.csv")
    assert header == ["building", "appliance", "day", "start", "moved_from"]
    assert (cfg.output_dir / "case1" / "netload" / "h1.csv").exists()


def test_case2_identical_households(tmp_path):
    houses = [{**HOUSE, "id": f"h{i}", "seed": 5} for i in range(8)]
    cfg = scenario(tmp_path, fleet={"households": houses}, grid={"num_days": 3})
    assert main(["case2", "--config", str(cfg)]) == 0
    recs = json.loads((tmp_path / "out" / "case2" / "recommendations.json").read_text())
    _, rows = io.read_csv(tmp_path / "out" / "case2" / "clusters.csv")
    assert recs == {} and all(r[-1] == "0" for r in rows)


def test_case2_three_clusters(tmp_path):
    cfg = scenario(tmp_path, fleet={"synthetic": {"kind": "case2", "count": 60}}, grid={"num_days": 5})
    assert main(["case2", "--config", str(cfg)]) == 0
    header, rows = io.read_csv(tmp_path / "out" / "case2" / "clusters.csv")
    assert header[2:5] == ["u0", "u1", "u2"] and {r[1] for r in rows} == {"0", "1", "2"}
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    c = manifest["campaign"]
    if c["mean_defined"]:
        assert abs(c["mean_saving"] - c["total_saving"] / c["with_recommendation"]) <= 1e-9


def test_strict_turns_warnings_into_failures(tmp_path, monkeypatch):
    def noisy(cfg, threads):
        warnings.warn("payments exceed revenue", NegativeProfitWarning)

    monkeypatch.setitem(cli.COMMANDS, "generate", noisy)
    cfg = str(scenario(tmp_path))
    with pytest.warns(NegativeProfitWarning):
        assert main(["generate", "--config", cfg]) == 0
    assert main(["generate", "--config", cfg, "--strict"]) == 1


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "bvpp_sim.cli", "version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
