"""Samplers, preconditioning, diagnostics, experiments and export"""
