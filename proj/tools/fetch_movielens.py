#!/usr/bin/env python3
# Copyright 2026 The collabrec Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Materializes MovieLens 100K as data/ml-100k/u.data.

grouplens.org is not always reachable from build machines, so this pulls the
copy of ml-100k that ships inside the recbole wheel on PyPI and rewrites its
atomic ``.inter`` file into the original tab-separated u.data layout.
"""

import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

INTER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/ml-100k/u.data")
    parser.add_argument("--wheel", help="use an already downloaded recbole wheel")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run(
                [sys.executable, "-m", "pip", "download", "--no-deps",
                 "--quiet", "-d", tmp, "recbole==1.2.1"],
                check=True)
            wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        lines = zipfile.ZipFile(wheel).read(INTER).decode().splitlines()

    header, rows = lines[0], lines[1:]
    if not header.startswith("user_id"):
        print(f"unexpected header: {header!r}", file=sys.stderr)
        return 1
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as f:
        for row in rows:
            user, item, rating, ts = row.split("\t")
            f.write(f"{user}\t{item}\t{int(float(rating))}\t{int(float(ts))}\n")
    print(f"wrote {len(rows)} ratings to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
