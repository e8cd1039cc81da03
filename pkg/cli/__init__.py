"""
Command-line front end for the anyon braiding simulator
"""
