"""Cut-point data models"""
