"""Configuration, logging, exceptions and random streams"""
