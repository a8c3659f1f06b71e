from __future__ import annotations

import pathlib
import sys

# frozen oracle values live next to the tests
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent / "fixtures"))
