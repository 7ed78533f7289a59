#! /usr/bin/env python3
# Example: ./scripts/update-golden.py            (rewrite every tests/data/*.out)
#          ./scripts/update-golden.py closure    (rewrite tests/data/closure.out)
import io
import shlex
import sys
from contextlib import redirect_stdout
from pathlib import Path

from pfl.cli import main

DATA = Path(__file__).parents[1] / "tests" / "data"

stems = sys.argv[1:] or sorted(path.stem for path in DATA.glob("*.pfl"))

for stem in stems:
    out = []
    for line in (DATA / f"{stem}.cmd").read_text().splitlines():
        words = shlex.split(line)
        buffer = io.StringIO()
        with redirect_stdout(buffer):
            code = main([words[0], str(DATA / f"{stem}.pfl"), *words[1:]])
        out.append(f"$ {line}\n{buffer.getvalue()}exit: {code}\n")
    (DATA / f"{stem}.out").write_text("".join(out))
    print(f"{stem}: {len(out)} commands")
