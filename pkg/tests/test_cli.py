import json
import os

import numpy as np
import pytest

from radscat import cli


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def files_of(d):
    return sorted(f for f in os.listdir(d))


def test_precedence_defaults_preset_file_flags(tmp_path):
    cfg = cli.resolve_config()
    assert cfg.mode == "solve" and cfg.potential == "gaussian"
    cfg = cli.resolve_config(preset="eaton-k30")
    assert (cfg.potential, cfg.source, cfg.k) == ("eaton", "beam", 30.0)
    path = write(tmp_path, "a.ini", "[run]\npreset = eaton-k30\n[solve]\nk = 12\n")
    cfg = cli.resolve_config(config=path)
    assert cfg.k == 12.0 and cfg.potential == "eaton"
    cfg = cli.resolve_config(config=path, k=7.0, nx=9)
    assert cfg.k == 7.0 and cfg.nx == 9


def test_config_parsing(tmp_path):
    text = ("[run]\nmode = residual\nthreads = 2\n[potential]\nname = random\nseed = 77\n"
            "[source]\nname = plane\nangle = 0.5\n[grid]\nnx = 11\nny = 13\nextent = 3.5\n"
            "[residual]\nstencil = 4\n[timedomain]\ntimes = 1, 2.5, 4\nrefine = 2\neps = 1e-9\n")
    cfg = cli.resolve_config(config=write(tmp_path, "c.ini", text))
    assert cfg.mode == "residual" and cfg.threads == 2
    assert cfg.potential_params == {"seed": 77}
    assert cfg.source_params == {"angle": 0.5}
    assert (cfg.nx, cfg.ny, cfg.extent, cfg.stencil) == (11, 13, 3.5, 4)
    assert cfg.times == (1.0, 2.5, 4.0) and cfg.td_refine == 2 and cfg.td_eps == 1e-9


@pytest.mark.parametrize("text,needle", [
    ("[grid]\nnx = 1\n", ":2 [grid] nx"),
    ("[solve]\n\neps = 0.5\n", ":3 [solve] eps"),
    ("[solve]\nk = fast\n", ":2 [solve] k"),
    ("[grid]\nextent = -1\n", "[grid] extent"),
    ("[bogus]\nx = 1\n", ":1 [bogus]"),
    ("[grid]\nwidth = 3\n", ":2 [grid] width"),
    ("[run]\nmode = dance\n", "[run] mode"),
    ("[potential]\nname = table\nfile = missing.txt\n", "[potential] file"),
    ("[potential]\nname = unobtainium\n", "[potential] name"),
])
def test_config_errors_identify_field(tmp_path, text, needle):
    path = write(tmp_path, "bad.ini", text)
    with pytest.raises(cli.ConfigError) as exc:
        cli.resolve_config(config=path)
    assert needle in str(exc.value)


def test_missing_config_and_preset(tmp_path):
    with pytest.raises(cli.ConfigError):
        cli.resolve_config(config=str(tmp_path / "nope.ini"))
    with pytest.raises(cli.ConfigError):
        cli.resolve_config(preset="nope")


def test_main_exit_codes(tmp_path, capsys):
    path = write(tmp_path, "bad.ini", "[grid]\nnx = 0\n")
    assert cli.main(["--config", path]) == 2
    assert "nx" in capsys.readouterr().err
    assert cli.main(["--list-presets"]) == 0
    assert "gaussian-k100" in capsys.readouterr().out


def test_solve_outputs_and_determinism(tmp_path):
    outs = []
    for tag in ("a", "b"):
        d = str(tmp_path / tag)
        assert cli.main(["--preset", "disk-k10", "--out", d, "--grid", "9", "7", "1.5"]) == 0
        outs.append(d)
    names = files_of(outs[0])
    assert names == ["metadata.json", "modes.csv", "scattered.grid", "summary.txt",
                     "timings.json", "total.grid"]
    for n in names:
        if n == "timings.json":
            continue
        with open(os.path.join(outs[0], n), "rb") as f1, open(os.path.join(outs[1], n), "rb") as f2:
            assert f1.read() == f2.read(), n
    meta = json.load(open(os.path.join(outs[0], "metadata.json")))
    assert meta["M"] == len(meta["panel_counts"]) - 1
    timings = json.load(open(os.path.join(outs[0], "timings.json")))
    assert {"ring_modes", "mode_solves", "grid_evaluation", "wall"} <= set(timings)


def test_residual_mode(tmp_path):
    d = str(tmp_path / "r")
    assert cli.main(["residual", "--preset", "disk-k10", "--out", d, "--grid", "21", "21", "2"]) == 0
    meta = json.load(open(os.path.join(d, "metadata.json")))
    assert meta["residual"]["stencil_half_width"] == 1
    assert {"residual.grid", "floor.grid", "attributed.grid"} <= set(files_of(d))


def test_timedomain_mode_free_space(tmp_path):
    path = write(tmp_path, "td.ini", "[run]\nmode = timedomain\n[potential]\nname = zero\n"
                 "[grid]\nnx = 3\nny = 3\nextent = 1\n[timedomain]\ntimes = 20, 25\n")
    d = str(tmp_path / "td")
    assert cli.main(["--config", path, "--out", d]) == 0
    idx = open(os.path.join(d, "frames.txt")).read().splitlines()
    assert idx[0] == "# index time file"
    assert idx[1].split()[2] == "frame_000.grid"
    assert float(idx[2].split()[1]) == 25.0
    from radscat.assembly import read_grid
    g, k, vals = read_grid(os.path.join(d, "frame_001.grid"))
    assert vals.shape == (3, 3) and np.all(np.isfinite(vals))


def test_selftest(tmp_path):
    d = str(tmp_path / "s")
    assert cli.main(["selftest", "--out", d]) == 0
    lines = open(os.path.join(d, "selftest.txt")).read().splitlines()
    assert len(lines) == 5 and all(line.startswith("PASS") for line in lines)
