import sys
from pathlib import Path

# Backend modules use bare imports (e.g. `from glm_irls import fit`)
sys.path.insert(0, str(Path(__file__).parent / "backend"))

from cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
