"""Error types shared across the package."""


class DataError(ValueError):
    """Invalid or inconsistent input data (files, records, images, profiles).

    The CLI maps this to exit code 1; usage errors are argparse's exit 2.
    """
