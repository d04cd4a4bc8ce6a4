#!/usr/bin/env python3
"""Fetch a Stanford bunny point cloud into data/StanfordBunny.ply.

The model ships inside the pymeshfix source distribution. pip downloads the
sdist (no install) and the PLY is extracted from it. Only the vertex block is
used by the denoiser; faces are skipped by the reader.
"""

import argparse
import pathlib
import subprocess
import sys
import tarfile
import tempfile

MEMBER_SUFFIX = "pymeshfix/examples/StanfordBunny.ply"


def main() -> int:
    root = pathlib.Path(__file__).resolve().parent.parent
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=pathlib.Path, default=root / "data" / "StanfordBunny.ply")
    parser.add_argument("--version", default="0.18.1", help="pymeshfix sdist version")
    args = parser.parse_args()

    if args.out.exists():
        print(f"{args.out} already present")
        return 0

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--no-binary", ":all:",
             f"pymeshfix=={args.version}", "-d", tmp],
            check=True,
        )
        sdists = list(pathlib.Path(tmp).glob("pymeshfix-*.tar.gz"))
        if not sdists:
            print("pip did not produce a pymeshfix sdist", file=sys.stderr)
            return 1
        with tarfile.open(sdists[0]) as tar:
            member = next((m for m in tar.getmembers() if m.name.endswith(MEMBER_SUFFIX)), None)
            if member is None:
                print(f"{MEMBER_SUFFIX} not found in {sdists[0].name}", file=sys.stderr)
                return 1
            data = tar.extractfile(member).read()

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(data)
    print(f"wrote {args.out} ({len(data)} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
