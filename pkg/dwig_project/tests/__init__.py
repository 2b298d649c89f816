"""Test suites for the generator engine and command line."""
