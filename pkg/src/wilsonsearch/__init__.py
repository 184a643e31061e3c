"""Wilson quotients for ranges of primes."""

__version__ = "0.1.0"
