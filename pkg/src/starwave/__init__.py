"""Discrete Klein-Gordon field on a star graph of harmonic chains."""
