"""
Test suite for the GANDALF simulator, compiler and harness.
"""
