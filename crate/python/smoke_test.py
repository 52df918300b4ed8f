#!/usr/bin/env python3
"""Smoke test for the sea_sim_py extension module.

Builds nothing itself: run `cargo build -p sea-sim-py` first (or pass
--release and build that profile). The compiled cdylib is loaded straight
from the cargo target directory, so no packaging step is involved.
"""

import argparse
import pathlib
import shutil
import sys
import tempfile

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent


def locate_cdylib(profile: str) -> pathlib.Path:
    candidates = [
        REPO_ROOT / "target" / profile / "libsea_sim_py.so",
        REPO_ROOT / "target" / profile / "libsea_sim_py.dylib",
        REPO_ROOT / "target" / profile / "sea_sim_py.dll",
    ]
    for path in candidates:
        if path.is_file():
            return path
    raise SystemExit(
        f"extension not found in target/{profile}; "
        "run: cargo build -p sea-sim-py"
    )


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--release", action="store_true", help="use target/release")
    args = parser.parse_args()
    profile = "release" if args.release else "debug"

    lib = locate_cdylib(profile)
    with tempfile.TemporaryDirectory() as tmp:
        # The import name must match the module name baked into the cdylib.
        target = pathlib.Path(tmp) / ("sea_sim_py" + lib.suffix.replace(".dylib", ".so"))
        shutil.copyfile(lib, target)
        sys.path.insert(0, tmp)
        import sea_sim_py

        print(f"loaded sea_sim_py {sea_sim_py.version()} from {lib}")

        geom = sea_sim_py.derive_geometry(0.028, 0.0525, 0.0525, 0.035, 0.118)
        assert abs(geom["d6"] - 0.10866922287382016) < 1e-12, geom
        assert abs(geom["d7"] - 0.12308127396155760) < 1e-12, geom
        print(f"geometry ok: d6={geom['d6']:.6f} d7={geom['d7']:.6f}")

        arm = sea_sim_py.moment_arm(0.028, 0.0525, 0.0525, 0.035, 0.118, 0.0)
        assert 0.0 < arm < geom["d6"], arm
        print(f"moment arm at theta=0: {arm:.6f} m")

        try:
            sea_sim_py.derive_geometry(0.028, -1.0, 0.0525, 0.035, 0.118)
        except ValueError as e:
            print(f"bad geometry rejected: {e}")
        else:
            raise SystemExit("negative link length was not rejected")

        metrics_toml = sea_sim_py.simulate("sim.duration = 1.6\n")
        metrics = {}
        for line in metrics_toml.splitlines():
            if "=" in line and not line.startswith("["):
                key, _, value = line.partition("=")
                try:
                    metrics[key.strip()] = float(value.strip())
                except ValueError:
                    pass
        assert "steady_state_error" in metrics, metrics_toml
        assert metrics["max_abs_e1"] < 1e-3, metrics
        print(
            "simulation ok: steady_state_error="
            f"{metrics['steady_state_error']:.3e} max_abs_e1={metrics['max_abs_e1']:.3e}"
        )

        try:
            sea_sim_py.simulate("plant.k = -5\n")
        except ValueError as e:
            print(f"bad config rejected: {e}")
        else:
            raise SystemExit("negative stiffness was not rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
