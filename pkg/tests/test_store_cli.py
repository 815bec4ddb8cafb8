from __future__ import annotations

import json

import pytest

from coxcells import cli
from coxcells.coxeter import CoxeterInputError, ResourceLimitError
from coxcells.store import canonical_json, fixture_names, load_group, system_from_dict, system_to_dict

FIXTURES = ["affine_a2", "affine_a4", "d4", "i2_2", "i2_3", "i2_4", "i2_6", "i2_7", "p5", "p6",
            "property_star", "triangle_237"]


def test_fixtures_load_and_round_trip():
    assert fixture_names() == FIXTURES
    for name in FIXTURES:
        sys_ = load_group(name)
        assert system_from_dict(system_to_dict(sys_)) == sys_


def test_fixture_matrices():
    assert load_group("triangle_237").matrix == ((1, 3, 2), (3, 1, 7), (2, 7, 1))
    assert load_group("affine_a4").labels_from == 0
    p5 = load_group("p5").matrix
    assert all(p5[i][(i + 1) % 5] == 2 and p5[i][(i + 2) % 5] == 0 for i in range(5))


@pytest.mark.parametrize("data", [
    [],
    {"rank": 2},
    {"coxeter_matrix": "11"},
    {"coxeter_matrix": [[1, 3.5], [3.5, 1]]},
    {"coxeter_matrix": [[1, True], [True, 1]]},
    {"rank": 3, "coxeter_matrix": [[1, 3], [3, 1]]},
    {"coxeter_matrix": [[1, 3], [3, 1]], "labels_from": 2},
])
def test_invalid_group_dicts(data):
    with pytest.raises(CoxeterInputError):
        system_from_dict(data)


def test_group_file_errors(tmp_path):
    bad = tmp_path / "g.json"
    bad.write_text("{not json")
    with pytest.raises(CoxeterInputError):
        load_group(bad)
    with pytest.raises(CoxeterInputError):
        load_group(tmp_path / "missing.json")


def test_canonical_json_is_sorted():
    assert canonical_json({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_info_kl_mu(capsys):
    code, out, _ = run(capsys, "info", "affine_a2")
    info = json.loads(out)
    assert code == 0 and info["D_f_bullet"] == ["1 2 1", "1 3 1", "2 3 2"] and info["finite"] is False
    code, out, _ = run(capsys, "info", "i2_6")
    assert json.loads(out)["order"] == 12 and json.loads(out)["type"] == "G2"
    code, out, _ = run(capsys, "--format", "text", "kl", "affine_a2", "1", "1 2 3 2 1")
    assert code == 0 and out.strip() == "1 + q"
    code, out, _ = run(capsys, "mu", "affine_a2", "1 2 3 2", "1 2 3 2 1")
    assert code == 0 and json.loads(out)["mu"] == 1


def test_cli_cells_output_and_manifest(tmp_path, capsys):
    out = tmp_path / "cells.json"
    png = tmp_path / "cells.png"
    code, _, _ = run(capsys, "-o", str(out), "cells", "affine_a2", "--radius", "8", "--side", "left",
                     "--reconstruct", "--plot", str(png))
    assert code == 0
    data = json.loads(out.read_text())
    assert data["nontrivial_certified_blocks"] == 9 and data["reconstruction"]["agrees"]
    manifest = json.loads((tmp_path / "cells.json.manifest.json").read_text())
    assert manifest["command"] == "cells" and str(png) in manifest["outputs"]
    assert png.read_bytes()[:4] == b"\x89PNG"
    first = out.read_text()
    run(capsys, "-o", str(out), "cells", "affine_a2", "--radius", "8", "--side", "left", "--reconstruct")
    assert out.read_text() == first


def test_cli_dot_and_text(capsys):
    code, out, _ = run(capsys, "--format", "dot", "cells", "i2_3", "--radius", "3")
    assert code == 0 and out.startswith("digraph")
    code, out, _ = run(capsys, "--format", "text", "cells", "i2_3", "--radius", "3")
    assert code == 0 and len(out.strip().splitlines()) == 4


def test_cli_cache(tmp_path, capsys):
    cache = tmp_path / "kl.cache"
    assert run(capsys, "--cache", str(cache), "cells", "affine_a2", "--radius", "6")[0] == 0
    assert cache.read_text().startswith("COXCELLS-KL v1")
    out = tmp_path / "o.json"
    assert run(capsys, "--cache", str(cache), "-o", str(out), "cells", "affine_a2", "--radius", "6")[0] == 0
    manifest = json.loads((tmp_path / "o.json.manifest.json").read_text())
    assert manifest["cache"]["loaded"] > 0
    # a cache from another group is refused
    code, _, err = run(capsys, "--cache", str(cache), "info", "p5")
    assert code == 2 and "different group" in err


def test_cli_dinv(tmp_path, capsys):
    code, out, _ = run(capsys, "dinv", "affine_a2", "--mode", "compare", "--max-len", "10", "--radius", "9")
    data = json.loads(out)
    assert code == 0 and data["compare"]["agree"] and data["terminated"]
    assert [r["word"] for r in data["generated"]] == ["1 2 3 2 1", "2 1 3 1 2", "3 1 2 1 3"]
    code, out, _ = run(capsys, "dinv", "i2_4", "--mode", "bruteforce", "--radius", "4")
    members = [r["word"] for r in json.loads(out)["bruteforce"] if r["verdict"] == "member_exact"]
    assert code == 0 and members == ["e", "1", "2", "1 2 1 2"]


def test_cli_exit_codes(monkeypatch, capsys):
    assert run(capsys, "info", "no_such_group")[0] == 2
    assert run(capsys, "cells", "affine_a2", "--radius", "1", "--margin", "2")[0] == 2
    assert run(capsys, "kl", "affine_a2", "1", "7")[0] == 2
    assert run(capsys, "verify", "i2_6", "--radius", "6")[0] == 0

    def boom(*a, **k):
        raise ResourceLimitError("too many elements")

    monkeypatch.setattr(cli, "enumerate_ball", boom)
    code, _, err = run(capsys, "cells", "affine_a2")
    assert code == 3 and "abstained" in err
    monkeypatch.setattr(cli, "verify_suite", lambda *a, **k: {"status": "violation"})
    assert run(capsys, "verify", "i2_3")[0] == 1
