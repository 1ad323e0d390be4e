"""Reference external agent: replies to every frame with its observation octet.

Run as ``python -m gradualbench.echo_agent``.
"""
import os
import sys


def _read_exact(fd: int, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = os.read(fd, n - len(buf))
        if not chunk:
            return buf
        buf += chunk
    return buf


def main() -> int:
    fin, fout = sys.stdin.fileno(), sys.stdout.fileno()
    while True:
        frame = _read_exact(fin, 2)
        if len(frame) < 2:
            return 0
        os.write(fout, frame[:1])


if __name__ == "__main__":
    sys.exit(main())
