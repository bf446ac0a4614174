"""
Test suite for becsim.
"""
