"""Exact simulation of restart, postselection and Latvian finite automata."""
