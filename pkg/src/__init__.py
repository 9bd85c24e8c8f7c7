"""sepscore: projection separability indices, cluster validity indices and their significance."""

__version__ = "0.1.0"
