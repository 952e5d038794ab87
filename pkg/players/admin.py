from django.contrib import admin
from .models import PlayerSlot

@admin.register(PlayerSlot)
class PlayerSlotAdmin(admin.ModelAdmin):
    list_display = ('roster', 'user_id', 'player_type', 'display_name', 'created_at')
    list_filter = ('roster', 'player_type')
    search_fields = ('roster', 'display_name')
    ordering = ('roster', 'user_id')
