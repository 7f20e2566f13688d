"""Core application logic"""

