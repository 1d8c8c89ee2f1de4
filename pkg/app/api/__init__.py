"""Routers HTTP de PhotonStats"""
