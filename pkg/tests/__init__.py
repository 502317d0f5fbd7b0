"""Test package for plateau-cli"""
