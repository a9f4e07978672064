"""Exception types shared across the package."""


class InputError(ValueError):
    """Bad user-supplied data: malformed files, shape mismatches, invalid config.

    The CLI maps this (and I/O errors) to exit code 2; anything else is an
    internal error and exits 1.
    """
