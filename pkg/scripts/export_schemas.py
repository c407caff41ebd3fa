"""Copy the JSON schemas bundled with the package into docs/schemas/."""

import shutil
from importlib import resources
from pathlib import Path

DEST = Path(__file__).resolve().parent.parent / "docs" / "schemas"


def main() -> None:
    DEST.mkdir(parents=True, exist_ok=True)
    src = resources.files("vbcswitch").joinpath("schemas")
    for item in src.iterdir():
        if item.name.endswith(".schema.json"):
            with resources.as_file(item) as path:
                shutil.copyfile(path, DEST / item.name)
                print(f"wrote {DEST / item.name}")


if __name__ == "__main__":
    main()
