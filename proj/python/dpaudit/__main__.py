import sys

from dpaudit import _core


def main() -> int:
    code, out, err = _core.run_command(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
