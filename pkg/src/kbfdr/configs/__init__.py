"""Bundled scenario configs for the simulate subcommand."""
