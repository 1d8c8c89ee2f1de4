"""Servicios de cálculo: fotofísica, simulación, correlación, interferometría y ajustes"""
