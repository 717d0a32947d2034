"""
Write a starter scene for the standard contact structure on R^(2n+1).

Run: python -m scripts.init_scene                      (interactive)
     python -m scripts.init_scene scenes/std.json 1    (quick)

The scene declares alpha = d z + x1*d y1 + ... + xn*d yn on a box grid with
contact and Reeb checks plus a Reeb flow. Run it with python -m app.main.
"""
import json
import sys
from pathlib import Path

from app.schemas.schemas import Scene

MAX_N = 4


def validate_n(text: str) -> tuple[bool, str]:
    """n must be an integer in 1..MAX_N"""
    if not text.strip().isdigit():
        return False, "n must be a positive integer"
    n = int(text)
    if not 1 <= n <= MAX_N:
        return False, f"n must lie between 1 and {MAX_N}"
    return True, ""


def coordinates(n: int) -> list[str]:
    if n == 1:
        return ["x", "y", "z"]
    return [f"x{i}" for i in range(1, n + 1)] + [f"y{i}" for i in range(1, n + 1)] + ["z"]


def build_scene(n: int) -> dict:
    coords = coordinates(n)
    xs, ys = coords[:n], coords[n:2 * n]
    alpha = " + ".join(["d z"] + [f"{x}*d {y}" for x, y in zip(xs, ys)])
    scene = {
        "coords": coords,
        "forms": {"alpha": alpha},
        "multivectors": {"reeb": "@z"},
        "grid": {"bounds": [[-1.0, 1.0]] * (2 * n) + [[-1.0, 1.0]], "nodes": 3, "t0": 0.0, "t1": 1.0, "h": 0.01},
        "tasks": [
            {"kind": "check", "check": "contact", "form": "alpha"},
            {"kind": "check", "check": "reeb", "form": "alpha", "vector": "reeb"},
            {"kind": "flow", "form": "alpha", "H": "1", "t": [0.0, 0.5], "seeds": [[0.0] * (2 * n + 1)]},
        ],
    }
    # round-trip through the schema so a starter scene is always valid
    Scene.model_validate(scene)
    return scene


def write_scene(path: Path, n: int, overwrite: bool = False) -> Path:
    path = Path(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"{path} already exists")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(build_scene(n), indent=2) + "\n", encoding="utf-8")
    return path


def interactive_setup():
    print("\n" + "=" * 60)
    print("  STARTER SCENE: STANDARD CONTACT STRUCTURE")
    print("=" * 60)

    while True:
        text = input("\nn (the scene lives on R^(2n+1)): ").strip() or "1"
        valid, msg = validate_n(text)
        if valid:
            break
        print(f"❌ {msg}")

    path = Path(input("Scene file [scene.json]: ").strip() or "scene.json")
    overwrite = False
    if path.exists():
        overwrite = input(f"{path} exists. Overwrite? (yes/no): ").strip().lower() in ["yes", "y"]
        if not overwrite:
            print("\n❌ Setup cancelled.")
            return

    write_scene(path, int(text), overwrite=overwrite)
    print(f"\n✅ Scene written to {path}")
    print(f"  Run it with: python -m app.main --scene {path} --out reports/")


def quick_setup(path: str, n_text: str):
    valid, msg = validate_n(n_text)
    if not valid:
        print(f"❌ {msg}")
        sys.exit(1)
    try:
        written = write_scene(Path(path), int(n_text))
    except FileExistsError as exc:
        print(f"❌ {exc}")
        sys.exit(1)
    print(f"✅ Scene written to {written}")


def main():
    if len(sys.argv) == 3:
        quick_setup(sys.argv[1], sys.argv[2])
    else:
        interactive_setup()


if __name__ == "__main__":
    main()
