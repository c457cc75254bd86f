"""Smoke test for the pynhskin extension.

Uses an installed `pynhskin` if available, otherwise loads the library
built by `cargo build -p nhskin-py` from the workspace target directory.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys
import tempfile


def load():
    try:
        import pynhskin

        return pynhskin
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent / "target"
    for profile in ("release", "debug"):
        for name in ("libpynhskin.so", "libpynhskin.dylib", "pynhskin.dll"):
            path = root / profile / name
            if path.exists():
                loader = importlib.machinery.ExtensionFileLoader("pynhskin", str(path))
                spec = importlib.util.spec_from_file_location("pynhskin", path, loader=loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                return module
    sys.exit("pynhskin not found; run `cargo build -p nhskin-py` first")


def main():
    nh = load()
    assert len(nh.preset_names()) == 11

    model = nh.Model.symplectic_hn()
    ks, energies = model.bands(60)
    for k, (ep, em) in zip(ks, energies):
        want = complex(4 * math.cos(k), 2 * math.sqrt(0.63) * math.sin(k))
        assert abs(ep - want) < 1e-12 and abs(em - want.conjugate()) < 1e-12
    assert model.winding(0j) == 0
    ordinary = nh.Model.ordinary()
    assert {ordinary.winding(1 + 0j), ordinary.winding(-1 + 0j)} == {1, -1}

    roots = model.gbz_roots(0.3 + 0.1j)
    for z in roots:
        assert min(abs(z * w - 1) for w in roots) < 1e-6

    obc = model.chain_spectrum(30)
    assert max(abs(e.imag) for e in obc) < 1e-6

    exp = nh.Experiment.preset("fig1-case1")
    assert nh.Experiment.from_toml(exp.to_toml()).to_toml() == exp.to_toml()
    run = exp.evolve(t_max=5.0, dt=0.1)
    assert len(run.times) == 51
    assert abs(sum(run.real_density(50)) - 1) < 1e-10
    echo, rate = run.loschmidt()
    assert abs(echo[0] - 1) < 1e-12 and all(0 <= x <= 1 + 1e-12 for x in echo)

    with tempfile.TemporaryDirectory() as d:
        files, summary = nh.Experiment.preset("fig2-dqpt-N80").run("dqpt", d)
        assert any(str(f).endswith("critical.csv") for f in files)
        print("\n".join(summary))

    try:
        nh.Experiment.preset("nope")
    except ValueError as e:
        assert "nope" in str(e)
    else:
        raise AssertionError("unknown preset accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
