# Generated by Django 5.1.1 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='PlayerSlot',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('roster', models.CharField(max_length=64)),
                ('user_id', models.PositiveSmallIntegerField()),
                ('player_type', models.CharField(choices=[('standard', 'Standard'), ('spectator', 'Spectator'), ('administrator', 'Administrator')], default='standard', max_length=16)),
                ('display_name', models.CharField(blank=True, max_length=64)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ('roster', 'user_id'),
                'unique_together': {('roster', 'user_id')},
            },
        ),
    ]
