import warnings

import pytest

from implantphy.cli import EXIT_BAD_INPUT, EXIT_FAILED, EXIT_OK, main
from implantphy.frame import FrameSchedule, frame_schedule
from implantphy.phy_model import LinkBudget
from implantphy.config import (
    ConfigError,
    default_settings,
    parse_settings,
    render_default_config,
)
from implantphy.phy_model import DEEP_TISSUE, EirpWarning, NEAR_SURFACE


@pytest.fixture(autouse=True)
def _silence_eirp():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EirpWarning)
        yield


def read_rows(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    body = [l for l in lines[1:] if not l.startswith("#")]
    footer = [l for l in lines[1:] if l.startswith("#")]
    return header, [dict(zip(header, l.split(","))) for l in body], footer


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def test_default_config_round_trips():
    for scenario, preset in (("deep", DEEP_TISSUE), ("near", NEAR_SURFACE)):
        settings = parse_settings(render_default_config(scenario))
        assert settings.config.path_loss == preset
        assert settings.block_bits == 1024
        assert settings.config == default_settings(scenario).config


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_settings("[link]\nbogus = 3\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_settings("[radio]\nm = 2\n")


def test_scenario_override_and_explicit_values():
    settings = parse_settings(
        "[path_loss]\nscenario = near\neta = 4.5\n\n[coding]\npb_target = 1e-5\n"
    )
    assert settings.config.path_loss.l0_db == NEAR_SURFACE.l0_db
    assert settings.config.path_loss.eta == 4.5
    assert settings.config.pb_target == 1e-5


def test_noise_level_override_in_dbm():
    settings = parse_settings("[noise]\nn0_dbm = -100.0\n")
    assert settings.config.n0_ref_w == pytest.approx(1e-13, rel=1e-9)


def test_bad_values_rejected():
    with pytest.raises(ConfigError):
        parse_settings("[link]\nm = two\n")
    with pytest.raises(ConfigError):
        parse_settings("[coding]\npb_target = 0.9\n")


# ---------------------------------------------------------------------------
# frame timeline
# ---------------------------------------------------------------------------


def test_frame_schedule_modes_sum_to_period():
    schedule = frame_schedule(LinkBudget())
    assert schedule.t_transient_s + schedule.t_active_s + schedule.t_sleep_s == (
        pytest.approx(schedule.t_frame_s, rel=1e-12)
    )
    assert [name for name, _ in schedule.modes] == ["transient", "active", "sleep"]
    assert min(dict(schedule.modes).values()) >= 0.0


def test_frame_schedule_sleep_is_derived_and_rate_stretches_active():
    plain = frame_schedule(LinkBudget())
    coded = frame_schedule(LinkBudget(), rate=0.5)
    assert coded.t_active_s == pytest.approx(2 * plain.t_active_s, rel=1e-12)
    assert coded.duty_cycle == pytest.approx(2 * plain.duty_cycle, rel=1e-12)
    assert coded.t_sleep_s < plain.t_sleep_s


def test_frame_schedule_rejects_overfull_frame():
    with pytest.raises(ValueError):
        frame_schedule(LinkBudget(t_frame_s=0.02))
    with pytest.raises(ValueError):
        frame_schedule(LinkBudget(), rate=0.0)
    with pytest.raises(ValueError):
        FrameSchedule(1.0, 0.1, 0.5, 0.3)  # parts must sum to the period


# ---------------------------------------------------------------------------
# CLI commands
# ---------------------------------------------------------------------------


def test_missing_command_is_bad_input(capsys):
    assert main([]) == EXIT_BAD_INPUT
    capsys.readouterr()


def test_tables_consistency(tmp_path, capsys):
    out = tmp_path / "tables.csv"
    assert main(["tables", "--which", "consistency", "--out", str(out)]) == EXIT_OK
    header, rows, footer = read_rows(out)
    assert header == ["M", "Pb", "snr_dB", "rate", "gain_dB"]
    assert len(rows) == 69
    assert len(footer) == 6 and all("PASS" in line for line in footer)
    assert (tmp_path / "tables.csv.manifest").exists()
    text = capsys.readouterr().out
    assert text.count("PASS") == 6


def test_tables_single_block(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["tables", "--which", "V", "--out", str(out)]) == EXIT_OK
    _, rows, _ = read_rows(out)
    assert len(rows) == 36  # 12 SNR rows, three error-rate columns
    assert {r["M"] for r in rows} == {"2"}
    capsys.readouterr()


def test_link_run_block_count_and_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["link-run", "--distance-mm", "100", "--seed", "9", "--scheme", "coded"]
    assert main(args + ["--out", str(out1)]) == EXIT_OK
    assert main(args + ["--out", str(out2)]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    header, rows, _ = read_rows(out1)
    blocks = [r for r in rows if r["record"] == "block"]
    assert len(blocks) == 8  # 8192 bits in 1024-bit blocks
    energy = [r for r in rows if r["record"] == "frame_energy"]
    assert len(energy) == 1
    assert float(energy[0]["total_j"]) > 0
    capsys.readouterr()


def test_link_run_near_noiseless_blocks_have_zero_ber(tmp_path, capsys):
    out = tmp_path / "clean.csv"
    args = ["link-run", "--distance-mm", "30", "--seed", "3",
            "--scheme", "coded", "--out", str(out)]
    assert main(args) == EXIT_OK
    _, rows, _ = read_rows(out)
    blocks = [r for r in rows if r["record"] == "block"]
    assert all(float(r["ber"]) == 0.0 for r in blocks)
    assert all(r["converged"] == "1" for r in blocks)
    capsys.readouterr()


def test_link_run_uncoded_scheme(tmp_path, capsys):
    out = tmp_path / "u.csv"
    args = ["link-run", "--distance-mm", "40", "--seed", "5",
            "--scheme", "uncoded", "--out", str(out)]
    assert main(args) == EXIT_OK
    _, rows, _ = read_rows(out)
    blocks = [r for r in rows if r["record"] == "block"]
    assert all(r["scheme"] == "uncoded" for r in blocks)
    assert all(float(r["realized_rate"]) == 1.0 for r in blocks)
    capsys.readouterr()


def test_link_run_infeasible_frame_exits_one(tmp_path, capsys):
    config = tmp_path / "cramped.ini"
    config.write_text("[link]\nt_frame_s = 0.02\n")
    code = main(["link-run", "--distance-mm", "100", "--config", str(config),
                 "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_FAILED
    capsys.readouterr()


def test_link_run_indivisible_blocks_exit_two(tmp_path, capsys):
    config = tmp_path / "odd.ini"
    config.write_text("[coding]\nblock_bits = 1000\n")
    code = main(["link-run", "--distance-mm", "100", "--config", str(config),
                 "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_BAD_INPUT
    capsys.readouterr()


def test_figure5_near_footer_and_single_flip(tmp_path, capsys):
    out = tmp_path / "fig5.csv"
    assert main(["figure5", "--pb", "1e-3", "--scenario", "near",
                 "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    # golden first lines pin the schema and the 6-significant-digit formatting
    assert lines[0] == (
        "d_mm,uncoded_M,uncoded_total_J,coded_M,coded_snr_dB,"
        "coded_rate,coded_total_J,winner"
    )
    assert lines[1] == "30,2,0.00126564,2,13,0.9553,0.00139941,uncoded"
    header, rows, footer = read_rows(out)
    assert header[0] == "d_mm" and header[-1] == "winner"
    winners = [r["winner"] for r in rows]
    assert sum(1 for a, b in zip(winners, winners[1:]) if a != b) == 1
    assert len(footer) == 1 and footer[0].startswith("# d_T_mm = ")
    d_t = float(footer[0].split("=")[1].split()[0])
    assert 50.0 <= d_t <= 90.0
    capsys.readouterr()


def test_figure5_bad_grid_is_bad_input(tmp_path, capsys):
    code = main(["figure5", "--grid", "10:5:1", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_BAD_INPUT
    capsys.readouterr()


def test_duty_cycle_report(tmp_path, capsys):
    out = tmp_path / "duty.csv"
    assert main(["duty-cycle", "--snr", "--out", str(out)]) == EXIT_OK
    header, rows, footer = read_rows(out)
    ratio_line = footer[0]
    assert ratio_line.endswith("= 0.208333")
    value = float(ratio_line.split("=")[1])
    assert value == pytest.approx(62.5 / 300.0, abs=5e-7)
    by_rate = {float(r["rate"]): float(r["duty_cycle"]) for r in rows
               if r["label"] in ("uncoded", "rate_sweep")}
    assert by_rate[0.5] == pytest.approx(2 * by_rate[1.0], rel=1e-5)  # 6 s.f. CSV
    table_rows = [r for r in rows if r["label"] == "table_row"]
    assert len(table_rows) == 12
    capsys.readouterr()


def test_manifest_digest_stable(tmp_path, capsys):
    config = tmp_path / "scenario.ini"
    config.write_text(render_default_config("near"))
    out1, out2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
    for out in (out1, out2):
        assert main(["duty-cycle", "--config", str(config),
                     "--out", str(out)]) == EXIT_OK
    digest1 = [l for l in (tmp_path / "m1.csv.manifest").read_text().splitlines()
               if l.startswith("config_sha256")]
    digest2 = [l for l in (tmp_path / "m2.csv.manifest").read_text().splitlines()
               if l.startswith("config_sha256")]
    assert digest1 == digest2
    capsys.readouterr()


def test_missing_config_file_is_bad_input(tmp_path, capsys):
    code = main(["figure5", "--config", str(tmp_path / "nope.ini"),
                 "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_BAD_INPUT
    capsys.readouterr()
