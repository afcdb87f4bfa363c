"""
Integration Tests Package

Commands driven through the CLI entry point against real files.

TEST AXIOMS:
=============
1. Determinism: same inputs + seed = byte-identical artifacts
2. Explicit failure: every error maps to one exit code
"""
