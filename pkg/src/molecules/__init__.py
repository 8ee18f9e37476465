"""位相空間の幾何、パラメータ化、分子の判定"""
