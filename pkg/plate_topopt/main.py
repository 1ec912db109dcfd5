"""plate-topopt コマンドのエントリポイント"""

import sys

from plate_topopt.source.cli_io.commands import main as cli_main


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
